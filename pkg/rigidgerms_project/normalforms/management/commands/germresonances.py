"""
Primary and secondary resonances of a germ.
"""
from ...normalizer import normalize_full
from ...serializers import BlockStructureSerializer, ResonanceReportSerializer
from ._base import GermCommand


class Command(GermCommand):
    help = "List the primary and secondary resonances up to the degree bound."
    command_name = 'resonances'

    def run(self, germ, germ_options, options, timings):
        cert = normalize_full(germ, germ_options.config, germ_options.declared, until='jordan')
        context = {'field': germ.field}
        return {
            'blocks': BlockStructureSerializer(cert.blocks, context=context).data,
            'resonances': ResonanceReportSerializer(cert.resonances, context=context).data,
        }
