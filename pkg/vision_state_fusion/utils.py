import ctypes
import os
import sys
import zlib

import numpy as np


class RedirectStream(object):
    """Silence a C-level stream while a noisy extension module loads.

    PyBullet prints its build banner straight to the process' stderr file
    descriptor, so a Python-level redirect is not enough.
    """

    @staticmethod
    def _flush_c_stream(stream):
        if isinstance(stream.name, str) and sys.platform.startswith('linux'):
            libc = ctypes.CDLL(None)
            libc.fflush(ctypes.c_void_p.in_dll(libc, stream.name[1:-1]))

    def __init__(self, stream=sys.stderr, file=os.devnull):
        self.stream = stream
        self.file = file

    def __enter__(self):
        try:
            self.fileno = self.stream.fileno()
        except (AttributeError, OSError, ValueError):
            self.fileno = None  # e.g. captured streams under test runners
            return
        self.stream.flush()
        self.fd = open(self.file, 'w+')
        self.dup_stream = os.dup(self.fileno)
        os.dup2(self.fd.fileno(), self.fileno)

    def __exit__(self, type, value, traceback):
        if self.fileno is None:
            return
        try:
            RedirectStream._flush_c_stream(self.stream)
        except (OSError, ValueError):
            pass
        os.dup2(self.dup_stream, self.fileno)
        os.close(self.dup_stream)
        self.fd.close()


def stable_key(name: str) -> int:
    """Process-independent 32-bit key of a string, used to seed RNG
    streams by name (``hash()`` is salted per process)."""
    return zlib.crc32(name.encode('utf-8'))


def make_rng(*keys) -> np.random.Generator:
    """Independent generator for the stream addressed by ``keys``.

    NumPy's SeedSequence hashes the whole key tuple, so streams for
    (seed, 0) and (seed, 1) are uncorrelated and can be produced in any
    order or in parallel.
    """
    entropy = [int(k) & 0xFFFFFFFFFFFFFFFF for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
