# src/kato_scat/storage/result_store.py

import json
import logging
import sqlite3
import struct
from pathlib import Path

import numpy as np

from kato_scat.errors import ConfigError

DUMP_MAGIC = b"KSOP"
DUMP_HEADER = struct.Struct("<4sqd12s")


class ResultStore:
    """SQLite store for JSON reports and dense operator matrices, keyed by config hash."""

    def __init__(self, db_path: Path):
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self.conn = sqlite3.connect(self.db_path, check_same_thread=False)
        self.create_tables()

    def create_tables(self):
        cursor = self.conn.cursor()
        cursor.execute("""
        CREATE TABLE IF NOT EXISTS reports (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            config_hash TEXT,
            command TEXT,
            status TEXT,
            data TEXT
        )""")
        # operators are stored as complex128 bytes in row-major order
        cursor.execute("""
        CREATE TABLE IF NOT EXISTS operators (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            config_hash TEXT,
            name TEXT,
            size INTEGER,
            x_max REAL,
            lattice_hash TEXT,
            matrix BLOB,
            weights BLOB,
            UNIQUE (config_hash, name)
        )""")
        self.conn.commit()

    def close(self):
        self.conn.close()

    def insert_report(self, config_hash: str, command: str, status: str, data: dict) -> int:
        cursor = self.conn.cursor()
        cursor.execute(
            "INSERT INTO reports (config_hash, command, status, data) VALUES (?, ?, ?, ?)",
            (config_hash, command, status, json.dumps(data, sort_keys=True)),
        )
        self.conn.commit()
        return cursor.lastrowid

    def latest_report(self, config_hash: str, command: str) -> dict | None:
        cursor = self.conn.cursor()
        cursor.execute(
            "SELECT data FROM reports WHERE config_hash = ? AND command = ? ORDER BY id DESC LIMIT 1",
            (config_hash, command),
        )
        row = cursor.fetchone()
        return json.loads(row[0]) if row else None

    def save_operator(self, config_hash: str, name: str, matrix: np.ndarray, weights: np.ndarray,
                      x_max: float, lattice_hash: str):
        matrix = np.ascontiguousarray(matrix, dtype=np.complex128)
        cursor = self.conn.cursor()
        cursor.execute(
            "INSERT OR REPLACE INTO operators (config_hash, name, size, x_max, lattice_hash, matrix, weights) "
            "VALUES (?, ?, ?, ?, ?, ?, ?)",
            (config_hash, name, matrix.shape[0], float(x_max), lattice_hash, matrix.tobytes(),
             np.ascontiguousarray(weights, dtype=np.float64).tobytes()),
        )
        self.conn.commit()
        logging.info(f"Stored operator {name} ({matrix.shape[0]}x{matrix.shape[0]}) under {config_hash}")

    def load_operator(self, config_hash: str, name: str):
        """Returns (matrix, weights, x_max, lattice_hash) or None."""
        cursor = self.conn.cursor()
        cursor.execute(
            "SELECT size, x_max, lattice_hash, matrix, weights FROM operators WHERE config_hash = ? AND name = ?",
            (config_hash, name),
        )
        row = cursor.fetchone()
        if row is None:
            return None
        size, x_max, lattice_hash, blob, weights = row
        matrix = np.frombuffer(blob, dtype=np.complex128).reshape(size, size).copy()
        return matrix, np.frombuffer(weights, dtype=np.float64).copy(), x_max, lattice_hash


def dump_operator(path, matrix: np.ndarray, x_max: float, lattice_hash: str) -> Path:
    """Header (magic, N, X_max, lattice hash) followed by row-major (re, im) float64 pairs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    matrix = np.ascontiguousarray(matrix, dtype=np.complex128)
    with path.open("wb") as handle:
        handle.write(DUMP_HEADER.pack(DUMP_MAGIC, matrix.shape[0], float(x_max), lattice_hash.encode()[:12]))
        handle.write(matrix.tobytes())
    return path


def read_operator_dump(path):
    """Returns (matrix, x_max, lattice_hash)."""
    data = Path(path).read_bytes()
    magic, size, x_max, lattice_hash = DUMP_HEADER.unpack_from(data)
    if magic != DUMP_MAGIC:
        raise ConfigError(f"{path} is not an operator dump")
    matrix = np.frombuffer(data, dtype=np.complex128, offset=DUMP_HEADER.size).reshape(size, size).copy()
    return matrix, x_max, lattice_hash.rstrip(b"\0").decode()
