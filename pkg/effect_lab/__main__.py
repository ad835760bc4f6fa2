# -*- coding: utf-8 -*-
import os
import sys


def main(argv=None):
    """``effect-lab <command> [options]`` with the bundled settings."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'effect_lab.settings')
    from django.core.management import execute_from_command_line

    argv = sys.argv[1:] if argv is None else list(argv)
    execute_from_command_line(['effect-lab'] + argv)


if __name__ == '__main__':
    main()
