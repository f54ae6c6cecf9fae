import sys

from degeneracy.cli import main

sys.exit(main())
