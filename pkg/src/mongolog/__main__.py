"""Allow ``python3 -m mongolog``."""
from .cli import main

main()
