"""Allow running acarmichael as a module: python -m acarmichael."""

from acarmichael.cli import main

if __name__ == "__main__":
    main()
