"""
Checksum utilities for emitted result files
Le manifeste liste chaque fichier avec son empreinte pour l'audit de reproductibilité
"""
import hashlib
import os
import logging
from typing import Dict, Optional

logger = logging.getLogger(__name__)


def calculate_file_hash(file_path: str, algorithm: str = 'sha256', chunk_size: int = 65536) -> Optional[str]:
    """Calculate file hash without loading entire file in memory"""
    hash_func = hashlib.new(algorithm)
    try:
        with open(file_path, 'rb') as f:
            while chunk := f.read(chunk_size):
                hash_func.update(chunk)
        return hash_func.hexdigest()
    except OSError as e:
        logger.warning(f"Failed to calculate hash for {file_path}: {e}")
        return None


def file_digest(file_path: str, algorithm: str = 'sha256') -> Dict:
    """Empreinte + taille d'un fichier, chemin relatif au dossier du fichier"""
    return {
        'path': os.path.basename(file_path),
        algorithm: calculate_file_hash(file_path, algorithm),
        'bytes': os.path.getsize(file_path),
    }


def verify_file_digest(file_path: str, expected: str, algorithm: str = 'sha256') -> bool:
    """Compare le hash courant avec celui du manifeste"""
    actual = calculate_file_hash(file_path, algorithm)
    if actual is None:
        return False
    if actual.lower() != expected.lower():
        logger.debug(f"Hash mismatch for {file_path}: expected={expected}, actual={actual}")
        return False
    return True
