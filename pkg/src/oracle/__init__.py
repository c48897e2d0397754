from src.oracle.oracle import OracleEffects, oracle_effects

__all__ = ["OracleEffects", "oracle_effects"]
