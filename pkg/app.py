"""
Launcher for the tlm command line: python app.py train --data train.csv --out model.json
"""

import os
import sys

# Add the project directory to the Python path
project_dir = os.path.join(os.path.abspath(os.path.dirname(__file__)), "tessellated-linear-model")
sys.path.insert(0, project_dir)

from src.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
