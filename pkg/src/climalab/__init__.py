"""climalab: a multi-agent climate analysis service.

Natural-language queries are turned into reviewed analysis plans, executed
as sandboxed diagnostic scripts with bounded auto-repair, validated, and
synthesized into reports with a committee-based impact assessment.
Validated artifacts feed back into a growing template library.
"""

__version__ = "0.1.0"
