import sys

from tollsub.main import main

sys.exit(main())
