from typing import Any, Dict

from ..core import register_command
from ..models import RunConfig
from ..reports import build_document, read_report
from .common import emit


def run_report(run_config: RunConfig) -> Dict[str, Any]:
    """Re-validate a JSON report and recompute its summary, positional profile included."""
    loaded = read_report(run_config.input)
    return build_document(loaded["command"], loaded["records"], generated_at=loaded["generated_at"])


@register_command("report")
def report_command(run_config: RunConfig) -> int:
    return emit(run_report(run_config), run_config)
