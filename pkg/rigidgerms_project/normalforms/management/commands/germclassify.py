"""
Row of the three-dimensional classification table matching a germ.
"""
from ...classifier3d import classify
from ...exceptions import PreconditionError
from ...normalizer import normalize_full
from ...serializers import CertificateSerializer, ClassRowSerializer
from ._base import GermCommand


class Command(GermCommand):
    help = "Normalize a germ in dimension 3 and match it against the classification table."
    command_name = 'classify'

    def run(self, germ, germ_options, options, timings):
        if germ.dim != 3:
            raise PreconditionError(f"classification covers d = 3 only, got d = {germ.dim}",
                                    stage='classify')
        cert = normalize_full(germ, germ_options.config, germ_options.declared)
        row = classify(cert)
        context = {'field': germ.field}
        return {
            'class': ClassRowSerializer(row).data,
            'certificate': CertificateSerializer(cert, context=context).data,
        }
