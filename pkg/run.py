#!/usr/bin/env python
"""
Entry point for the linear-quadratic separation toolkit
Run this script with a subcommand: generate, mix, separate, gradcheck, figures, stability
"""

import sys
from src.main import main


if __name__ == '__main__':
    sys.exit(main())
