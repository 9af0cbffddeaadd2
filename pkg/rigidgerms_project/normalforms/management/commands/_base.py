"""
Shared plumbing for the germ management commands.
"""
import hashlib
import logging
import sys
import time

from django.core.management.base import BaseCommand, CommandError
from rest_framework.renderers import JSONRenderer

from ...conf import MODES, NumericConfig
from ...exceptions import GermError, GermFileError
from ...germlang import parse_germ_file
from ...serializers import ErrorSerializer, ReportSerializer

logger = logging.getLogger(__name__)

TOLERANCES = ('coeff', 'res', 'eig', 'residual', 'series')


class GermCommand(BaseCommand):
    """
    Base class for commands that read one germ file and print one report.

    Subclasses implement run(germ, germ_options, options, timings) and
    return the outcome dict.
    """

    command_name = None

    def add_arguments(self, parser):
        parser.add_argument('file', help="germ file (JSON), or - for stdin")
        parser.add_argument('--degree', type=int, help="truncation degree N")
        parser.add_argument('--mode', choices=MODES, help="coefficient arithmetic")
        for name in TOLERANCES:
            parser.add_argument(f'--tol-{name}', type=float, dest=f'tol_{name}')
        parser.add_argument('--report', choices=['json', 'text'], default='json')
        parser.add_argument('--timings', action='store_true',
                            help="include wall-clock timings in the report")

    def read_input(self, path):
        if path == '-':
            return sys.stdin.buffer.read()
        try:
            with open(path, 'rb') as handle:
                return handle.read()
        except OSError as e:
            raise GermFileError([('file', f"cannot read {path}: {e.strerror}")])

    def overrides(self, options):
        values = {'mode': options.get('mode'), 'trunc': options.get('degree')}
        for name in TOLERANCES:
            values[f'tol_{name}'] = options.get(f'tol_{name}')
        return {k: v for k, v in values.items() if v is not None}

    def extra_options(self, options):
        """Command-specific options recorded in the report."""
        return {}

    def handle(self, *args, **options):
        overrides = self.overrides(options)
        timings = {}
        report = {
            'command': self.command_name,
            'input_digest': None,
            'options': dict(overrides, **self.extra_options(options)),
            'outcome': None,
            'timings': timings if options.get('timings') else None,
        }
        try:
            raw = self.read_input(options['file'])
            report['input_digest'] = hashlib.sha256(raw).hexdigest()
            started = time.perf_counter()
            germ, germ_options = parse_germ_file(raw, NumericConfig.from_settings(), **overrides)
            timings['parse'] = time.perf_counter() - started
            report['options'] = dict(germ_options.config.as_dict(), **self.extra_options(options))
            started = time.perf_counter()
            report['outcome'] = dict({'status': 'ok'},
                                     **self.run(germ, germ_options, options, timings))
            timings['run'] = time.perf_counter() - started
        except GermError as e:
            logger.info("%s failed at stage %s: %s", self.command_name, e.stage, e.message)
            report['input_digest'] = report['input_digest'] or ''
            report['outcome'] = {'status': 'error', 'error': ErrorSerializer(e).data}
            self.emit(report, options)
            raise CommandError(f"{e.code}: {e.message}", returncode=e.exit_status)
        self.emit(report, options)

    def run(self, germ, germ_options, options, timings):
        raise NotImplementedError

    # ------------------------------------------
    # Output
    # ------------------------------------------

    def emit(self, report, options):
        data = ReportSerializer(report).data
        if options.get('report') == 'text':
            self.stdout.write('\n'.join(render_text(data)))
        else:
            rendered = JSONRenderer().render(data, renderer_context={'indent': 2})
            self.stdout.write(rendered.decode('utf-8'))


def render_text(data, indent=0):
    """Indented key: value lines for the text report."""
    pad = '  ' * indent
    lines = []
    if isinstance(data, dict):
        for key, value in data.items():
            if isinstance(value, (dict, list)) and value:
                lines.append(f"{pad}{key}:")
                lines.extend(render_text(value, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_scalar(value)}")
    elif isinstance(data, list):
        for item in data:
            if isinstance(item, (dict, list)) and item:
                lines.append(f"{pad}-")
                lines.extend(render_text(item, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(item)}")
    else:
        lines.append(f"{pad}{_scalar(data)}")
    return lines


def _scalar(value):
    if value is None:
        return '-'
    if isinstance(value, (dict, list)):
        return '[]' if isinstance(value, list) else '{}'
    return str(value)
