import logging


def setup_logging(level: str = "INFO") -> None:
    """
    Configure the root logger once for CLI runs
    """
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    # numpy / joblib chatter stays at WARNING
    logging.getLogger("joblib").setLevel(logging.WARNING)
