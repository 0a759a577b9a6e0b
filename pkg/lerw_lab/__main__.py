"""Allow running the package as: python -m lerw_lab"""

import sys

from .main import main

if __name__ == '__main__':
    sys.exit(main())
