"""The ``run-component`` loop: receive, admit, verify, authorize, process, forward."""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

from itp.components.audit import EventKind
from itp.components.handlers import ComponentContext, get_handler
from itp.errors import CodecError, ComponentError, MisroutedMessage
from itp.model import Message
from itp.routing import DeliveryReceipt, Router

# importing the components registers their inbound handlers
from itp.components import certification, directory  # noqa: F401

logger = logging.getLogger(__name__)

POLL_SECONDS = 1.0


@dataclass
class ServeSummary:
    processed: int = 0
    rejected: int = 0
    receipts: List[DeliveryReceipt] = field(default_factory=list)
    forwarded: List[Message] = field(default_factory=list)

    @property
    def handled(self) -> int:
        return self.processed + self.rejected


def serve(ctx: ComponentContext, router: Router, max_messages: Optional[int] = None,
          idle_timeout: Optional[float] = None, poll: float = POLL_SECONDS) -> ServeSummary:
    """Processes inbound messages of ``ctx.name`` one at a time.

    Stops after ``max_messages`` messages, or when nothing arrived for
    ``idle_timeout`` seconds; runs until interrupted when both are None.
    Rejected messages are audited and skipped. Transport and store failures
    propagate."""
    handler = get_handler(ctx.name)
    summary = ServeSummary()
    idle = 0.0
    logger.info("%s serving", ctx.name)
    while max_messages is None or summary.handled < max_messages:
        try:
            msg = router.receive(ctx.name, timeout=poll)
        except (MisroutedMessage, CodecError) as err:
            logger.warning("%s dropped an inbound document: %s", ctx.name, err)
            ctx.audit.append(ctx.name, EventKind.REJECTED, detail=str(err))
            summary.rejected += 1
            continue
        if msg is None:
            idle += poll
            if idle_timeout is not None and idle >= idle_timeout:
                break
            continue
        idle = 0.0
        try:
            outputs = handler(msg, ctx)
        except ComponentError as err:
            # already audited by the stage that rejected it
            logger.warning("%s rejected %s: %s", ctx.name, msg.id, err)
            summary.rejected += 1
            continue
        for out in outputs:
            summary.receipts.append(router.send(out))
            summary.forwarded.append(out)
        summary.processed += 1
    logger.info("%s stopped after %d processed, %d rejected", ctx.name, summary.processed, summary.rejected)
    return summary
