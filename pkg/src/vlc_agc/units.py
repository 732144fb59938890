"""Decibel conversions. Everything inside the package is linear SI."""

import numpy as np


def db_to_lin(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def lin_to_db(lin):
    return 10.0 * np.log10(np.asarray(lin, dtype=float))


def dbm_to_w(dbm):
    return 1e-3 * db_to_lin(dbm)


def w_to_dbm(w):
    return lin_to_db(np.asarray(w, dtype=float) / 1e-3)


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def db(x):
    """Power ratio in dB (scalar in, float out)."""
    return _scalar(lin_to_db(x))


def dbm(x):
    return _scalar(w_to_dbm(x))


def from_db(x):
    return _scalar(db_to_lin(x))


def from_dbm(x):
    return _scalar(dbm_to_w(x))
