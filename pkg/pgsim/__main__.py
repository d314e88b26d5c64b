import sys

from .entrance import main

sys.exit(main())
