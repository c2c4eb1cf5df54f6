import json
import logging
from typing import Any, Dict, List, Optional, TextIO

logger = logging.getLogger(__name__)


class SearchTrace:
    """JSON-lines recorder for node expansions and incumbent updates.

    With a stream every event is written to it as one JSON object per line and
    only incumbent updates stay in memory; without one all events are kept.
    """

    def __init__(self, stream: Optional[TextIO] = None, expansions: bool = True):
        self.stream = stream
        self.expansions = expansions
        self.events: List[Dict[str, Any]] = []
        self.count = 0
        self._incumbents: List[Dict[str, Any]] = []

    def emit(self, event: str, **fields: Any) -> None:
        if event == 'expand' and not self.expansions:
            return
        record = {'event': event, **fields}
        self.count += 1
        if event == 'incumbent':
            self._incumbents.append(record)
        if self.stream is None:
            self.events.append(record)
        else:
            self.stream.write(json.dumps(record, sort_keys=True) + "\n")

    def incumbents(self) -> List[Dict[str, Any]]:
        return list(self._incumbents)

    def close(self) -> None:
        if self.stream is not None:
            self.stream.flush()
            logger.debug(f"Trace flushed: {self.count} events")
