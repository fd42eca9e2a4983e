import os
import sys

# Run tests against the source tree whether or not the package is installed.
SRC = os.path.join(os.path.dirname(__file__), os.pardir, "src")
if os.path.abspath(SRC) not in (os.path.abspath(p) for p in sys.path):
    sys.path.insert(0, os.path.abspath(SRC))
