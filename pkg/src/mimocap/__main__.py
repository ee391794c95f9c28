import sys

from mimocap.cli import main

sys.exit(main())
