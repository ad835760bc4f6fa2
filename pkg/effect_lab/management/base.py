# -*- coding: utf-8 -*-
import logging
import os

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError
from django.core.management.color import no_style

from ..conf import settings
from ..exceptions import ConfigError, EffectLabError
from ..forms import load_run_config
from ..utils import dump_json, make_run_dir

logger = logging.getLogger('effect_lab')


def error_line(kind, detail):
    detail = ' '.join(str(detail).split())
    return 'error={0} detail={1}'.format(kind, detail)


class RunCommand(BaseCommand):
    """
    Resolves the run config, creates ``<output_root>/<timestamp>-<name>/``
    with ``config.json``, ``logs/`` and ``artifacts/``, and maps package
    errors to exit codes.
    """
    # section keys overridden by command line flags: {dest: (section, key)}
    config_flags = {}

    @property
    def name(self):
        return self.__class__.__module__.rsplit('.', 1)[-1]

    def add_arguments(self, parser):
        parser.add_argument(
            '--config', default=None,
            help='JSON run config; flags override its values (default: %(default)s)')
        parser.add_argument(
            '--seed', type=int, default=None,
            help='master seed for every seeded section (default: from config)')
        parser.add_argument(
            '--output-root', dest='output_root', default=None,
            help='parent of the run directory (default: EFFECT_LAB_OUTPUT_ROOT)')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def overrides(self, options):
        tree = {}
        if options.get('seed') is not None:
            tree['seed'] = options['seed']
            for section in ('model', 'train', 'sample'):
                tree.setdefault(section, {})['seed'] = options['seed']
        if options.get('output_root'):
            tree['output_root'] = options['output_root']
        for dest, (section, key) in self.config_flags.items():
            if options.get(dest) is not None:
                tree.setdefault(section, {})[key] = options[dest]
        return tree

    def require_path(self, path, what):
        if not path or not os.path.exists(path):
            raise ConfigError('{0} {1} does not exist'.format(what, path))
        return path

    def handle(self, *args, **options):
        if settings.EFFECT_LAB_NO_COLOR or options.get('no_color'):
            self.style = no_style()
        try:
            run = load_run_config(options.get('config'), self.overrides(options))
        except ValidationError as exc:
            raise CommandError(error_line('config', '; '.join(exc.messages)),
                               returncode=ConfigError.exit_code)

        run_dir = make_run_dir(run.output_root, self.name)
        dump_json(run.to_dict(), os.path.join(run_dir, 'config.json'))
        handler = logging.FileHandler(os.path.join(run_dir, 'logs', self.name + '.log'))
        handler.setFormatter(logging.Formatter('%(asctime)s %(levelname)s %(name)s %(message)s'))
        logger.addHandler(handler)
        try:
            summary = self.run(run, run_dir, options)
        except EffectLabError as exc:
            logger.error('%s failed: %s', self.name, exc)
            raise CommandError(error_line(exc.kind, exc), returncode=exc.exit_code)
        except ValidationError as exc:
            raise CommandError(error_line('config', '; '.join(exc.messages)),
                               returncode=ConfigError.exit_code)
        except OSError as exc:
            logger.exception('%s failed', self.name)
            raise CommandError(error_line('io', exc), returncode=EffectLabError.exit_code)
        except Exception as exc:
            # torch and numpy failures end up here; the traceback goes to the run log
            logger.exception('%s failed', self.name)
            raise CommandError(error_line(EffectLabError.kind, '{0}: {1}'.format(
                type(exc).__name__, exc)), returncode=EffectLabError.exit_code)
        finally:
            logger.removeHandler(handler)
            handler.close()

        fields = dict(summary or {}, run_dir=run_dir)
        self.stdout.write(self.style.SUCCESS(
            ' '.join('{0}={1}'.format(key, value) for key, value in fields.items())))

    def run(self, run, run_dir, options):
        raise NotImplementedError
