"""Command runners and MCP tools registration aggregator."""

from .certify import certify_command, certify_text  # noqa: F401
from .attack import attack_command, attack_text  # noqa: F401
from .saliency import saliency_command, saliency_text  # noqa: F401
from .fixtures import gen_fixtures_command, generate_fixtures  # noqa: F401
from .report import report_command  # noqa: F401
