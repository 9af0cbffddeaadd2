"""
Rigidity, contraction and block structure of a germ.
"""
from ...exceptions import NotContractingError
from ...germ_model import detect_blocks, is_contracting, rigidity_check
from ...serializers import (
    BlockStructureSerializer,
    ContractionSerializer,
    RigiditySerializer,
)
from ._base import GermCommand


class Command(GermCommand):
    help = "Check that a germ is rigid and contracting and report its block structure."
    command_name = 'check'

    def run(self, germ, germ_options, options, timings):
        config = germ_options.config
        context = {'field': germ.field}
        rigidity = rigidity_check(germ)
        contraction = is_contracting(germ, config.tol_eig)
        if not contraction.contracting:
            raise NotContractingError(
                f"spectral radius {contraction.radius!r} is not below 1", stage='contraction',
                radius=float(contraction.radius))
        blocks = detect_blocks(germ, rigidity)
        return {
            'rigidity': RigiditySerializer(rigidity, context=context).data,
            'contraction': ContractionSerializer(contraction, context=context).data,
            'blocks': BlockStructureSerializer(blocks, context=context).data,
        }
