import sys

from mmle.cli import main

sys.exit(main())
