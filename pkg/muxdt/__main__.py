# __main__.py - python -m muxdt

from .cli import main

if __name__ == "__main__":
    main()
