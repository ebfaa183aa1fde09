import sys

from magicsparse.main import main

sys.exit(main())
