import sys

from idfeedback.cli import main

sys.exit(main())
