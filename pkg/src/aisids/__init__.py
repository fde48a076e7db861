"""Artificial immune system engine for flow-feature intrusion detection.

Stage one encodes feature records into antigens (``representation``);
stage two models the immune response: negative selection (``negsel``),
clonal maturation (``clonal``), dendritic-cell danger fusion (``dca``) and
detector turnover (``lifecycle``).
"""

from .errors import (AffinityError, AISError, CoverageError, DimensionError, EncodeError,
                     InputError, LifecycleError, PolicyError, SchemaError, SchemaMismatchError,
                     ValidationError)
from .negsel import (Detector, DetectorIndex, DetectorSet, SelfSet, Verdict, censor, classify,
                     classify_batch, generate_nsa, generate_vdetector, linear_scan)
from .representation import (AffinityMeasure, Antigen, FeatureSchema, affinity, encode,
                             fit_schema, to_bits)

__version__ = "0.1.0"
