"""Plain-text configuration parsing (fail-closed key-value sections)."""

from __future__ import annotations

from .network_model import NetworkConfig, dbm_to_watt, db_to_linear

__all__ = ["ConfigError", "parse_sections", "network_from_section", "coerce"]


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key/line."""


def parse_sections(text: str) -> dict:
    """Parse `[section]` / `key = value` lines; returns {section: {key: (value, line)}}.

    Comments start with '#'; unknown structure is an error with its line
    number. Duplicate keys within a section are errors (fail-closed).
    """
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise ConfigError(f"line {lineno}: empty section name")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in [{current}]")
        sections[current][key] = (value, lineno)
    return sections


def coerce(kind: str, key: str, value: str, lineno: int):
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "bool":
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ValueError(value)
        if kind == "float_list":
            return [float(v) for v in value.replace(",", " ").split()]
        if kind == "str":
            return value
    except ValueError:
        pass
    raise ConfigError(f"line {lineno}: key {key!r} expects {kind}, got {value!r}")


NETWORK_KEYS = {
    "K": "int",
    "A": "float",
    "sigma_w2": "float",
    "snr_c_db": "float",
    "rho": "float",
    "sigma_h2": "float",
    "snr_h_db": "float",
    "sigma_v2": "float",
    "sigma_v2_dbm": "float",
}


def network_from_section(section: dict, defaults: dict | None = None) -> NetworkConfig:
    """Build a NetworkConfig from a parsed `[network]` section.

    Exactly one of each variance/SNR pair must be present (after defaults);
    unknown keys are errors.
    """
    values = dict(defaults or {})
    for key, (raw, lineno) in section.items():
        if key not in NETWORK_KEYS:
            raise ConfigError(f"line {lineno}: unknown [network] key {key!r}")
        values[key] = coerce(NETWORK_KEYS[key], key, raw, lineno)

    def exactly_one(a, b):
        have = [k for k in (a, b) if k in values]
        if len(have) != 1:
            raise ConfigError(f"exactly one of {a!r} / {b!r} must be set, got {have}")
        return have[0]

    for key in ("K", "A", "rho"):
        if key not in values:
            raise ConfigError(f"[network] missing required key {key!r}")
    K = values["K"]
    A = values["A"]
    rho = values["rho"]

    v_keys = [k for k in ("sigma_v2", "sigma_v2_dbm") if k in values]
    if len(v_keys) > 1:
        raise ConfigError("set only one of 'sigma_v2' / 'sigma_v2_dbm'")
    if v_keys == ["sigma_v2_dbm"]:
        sigma_v2 = dbm_to_watt(values["sigma_v2_dbm"])
    elif v_keys == ["sigma_v2"]:
        sigma_v2 = values["sigma_v2"]
    else:
        sigma_v2 = dbm_to_watt(-50.0)

    w_key = exactly_one("sigma_w2", "snr_c_db")
    sigma_w2 = values["sigma_w2"] if w_key == "sigma_w2" else A**2 / db_to_linear(values["snr_c_db"])
    h_key = exactly_one("sigma_h2", "snr_h_db")
    sigma_h2 = values["sigma_h2"] if h_key == "sigma_h2" else sigma_v2 * db_to_linear(values["snr_h_db"])
    try:
        return NetworkConfig(K=K, A=A, sigma_w2=sigma_w2, rho=rho,
                             sigma_h2=sigma_h2, sigma_v2=sigma_v2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
