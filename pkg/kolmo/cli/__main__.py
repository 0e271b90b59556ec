import sys

from kolmo.cli.main import main

sys.exit(main())
