import sys

from phase_qubit.cli import main

sys.exit(main())
