import sys

from combotpe.cli import main

sys.exit(main())
