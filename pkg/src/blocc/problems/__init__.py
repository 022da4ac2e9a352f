from .pedagogical import build_pedagogical
from .toy import build_toy
from .svm import SvmDataset, parse_libsvm, build_svm
from .transport import (NetworkSpec, three_node_spec, nine_node_spec,
                        build_transport, parse_network_spec)

__all__ = [
    "build_pedagogical", "build_toy",
    "SvmDataset", "parse_libsvm", "build_svm",
    "NetworkSpec", "three_node_spec", "nine_node_spec", "build_transport",
    "parse_network_spec",
]
