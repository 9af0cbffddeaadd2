"""
Normal form of a contracting rigid germ with its conjugacy certificate.
"""
from ...normalizer import PASS_ORDER, normalize_full
from ...serializers import CertificateSerializer
from ._base import GermCommand


class Command(GermCommand):
    help = "Conjugate a germ to its normal form and report the certificate."
    command_name = 'normalize'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--pass', dest='until', choices=PASS_ORDER + ('all',), default='all',
                            help="run the stages up to and including this one")

    def extra_options(self, options):
        return {'pass': options.get('until', 'all')}

    def run(self, germ, germ_options, options, timings):
        cert = normalize_full(germ, germ_options.config, germ_options.declared,
                              until=options.get('until', 'all'))
        return {'certificate': CertificateSerializer(cert, context={'field': germ.field}).data}
