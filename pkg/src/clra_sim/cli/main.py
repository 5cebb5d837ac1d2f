#!/usr/bin/env python3
"""
CLI Entry Point for the CL-RA simulator

Main command-line interface for running experiments and validation suites
"""

import os
import sys

# Add the package to Python path if running as script
if __name__ == "__main__":
    script_dir = os.path.dirname(os.path.abspath(__file__))
    src_dir = os.path.dirname(os.path.dirname(script_dir))
    sys.path.insert(0, src_dir)

    from clra_sim.cli.runner import main as runner_main
    from clra_sim.core.utils import handle_keyboard_interrupt
else:
    from ..core.utils import handle_keyboard_interrupt
    from .runner import main as runner_main


def main(argv=None):
    """Main entry point for the simulator CLI"""
    try:
        sys.exit(runner_main(argv))
    except KeyboardInterrupt:
        handle_keyboard_interrupt()
    except Exception as e:
        print(f"Error: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
