"""Deterministic single-threaded event loop running on a virtual clock.

All session orchestration (agent turns, backend latency, world ticks) is
scheduled here instead of on asyncio, so that a scripted session produces
the same interleaving on every run.  Callbacks due at the same virtual
instant fire in scheduling order.
"""

from __future__ import annotations

import heapq
import inspect
from typing import Any, Callable, Coroutine


class CancelledError(Exception):
    """Raised inside a coroutine whose task was cancelled."""


class SimFuture:
    """One-shot result holder awaitable from coroutines driven by SimLoop."""

    __slots__ = ("_done", "_result", "_exception", "_callbacks")

    def __init__(self) -> None:
        self._done = False
        self._result: Any = None
        self._exception: BaseException | None = None
        self._callbacks: list[Callable[[SimFuture], None]] = []

    def done(self) -> bool:
        return self._done

    def set_result(self, value: Any = None) -> None:
        if self._done:
            return
        self._done = True
        self._result = value
        self._run_callbacks()

    def set_exception(self, exc: BaseException) -> None:
        if self._done:
            return
        self._done = True
        self._exception = exc
        self._run_callbacks()

    def result(self) -> Any:
        if not self._done:
            raise RuntimeError("future is not done")
        if self._exception is not None:
            raise self._exception
        return self._result

    def add_done_callback(self, fn: Callable[[SimFuture], None]) -> None:
        if self._done:
            fn(self)
        else:
            self._callbacks.append(fn)

    def _run_callbacks(self) -> None:
        callbacks, self._callbacks = self._callbacks, []
        for fn in callbacks:
            fn(self)

    def __await__(self):
        if not self._done:
            yield self
        return self.result()


class SimTask(SimFuture):
    """A coroutine being stepped by the loop; completes with its return value."""

    __slots__ = ("_coro", "_loop", "_cancelled")

    def __init__(self, coro: Coroutine, loop: "SimLoop") -> None:
        super().__init__()
        self._coro = coro
        self._loop = loop
        self._cancelled = False

    def cancel(self) -> None:
        if not self.done() and inspect.getcoroutinestate(self._coro) == "CORO_CREATED":
            # Never started: close it now so nothing dangles at GC time.
            self._coro.close()
            self.set_exception(CancelledError())
            return
        self._cancelled = True

    def _step(self, value: Any = None, exc: BaseException | None = None) -> None:
        if self.done():
            return
        try:
            if self._cancelled and exc is None:
                exc = CancelledError()
                self._cancelled = False
            if exc is not None:
                awaited = self._coro.throw(exc)
            else:
                awaited = self._coro.send(value)
        except StopIteration as stop:
            self.set_result(stop.value)
            return
        except CancelledError:
            self.set_exception(CancelledError())
            return
        except BaseException as err:  # surfaced when the task is awaited
            self.set_exception(err)
            return
        if not isinstance(awaited, SimFuture):
            raise TypeError(f"task awaited a non-sim awaitable: {awaited!r}")
        awaited.add_done_callback(self._wake)

    def _wake(self, fut: SimFuture) -> None:
        # Resume on the loop rather than inline so completion order stays
        # governed by the scheduling queue.
        def resume() -> None:
            if fut._exception is not None:
                self._step(exc=fut._exception)
            else:
                self._step(value=fut._result)

        self._loop.call_soon(resume)


class SimLoop:
    """Min-heap scheduler over (due_time, insertion_seq) pairs."""

    def __init__(self) -> None:
        self.now = 0.0
        self._heap: list[tuple[float, int, Callable[[], None]]] = []
        self._seq = 0

    def call_at(self, when: float, fn: Callable[[], None]) -> None:
        if when < self.now:
            when = self.now
        self._seq += 1
        heapq.heappush(self._heap, (when, self._seq, fn))

    def call_later(self, delay: float, fn: Callable[[], None]) -> None:
        self.call_at(self.now + max(0.0, delay), fn)

    def call_soon(self, fn: Callable[[], None]) -> None:
        self.call_at(self.now, fn)

    def sleep(self, delay: float) -> SimFuture:
        fut = SimFuture()
        self.call_later(delay, fut.set_result)
        return fut

    def create_task(self, coro: Coroutine) -> SimTask:
        task = SimTask(coro, self)
        self.call_soon(task._step)
        return task

    def pending(self) -> int:
        return len(self._heap)

    def run_one(self) -> bool:
        """Run the next due callback, advancing the clock to it."""
        if not self._heap:
            return False
        when, _, fn = heapq.heappop(self._heap)
        self.now = max(self.now, when)
        fn()
        return True

    def advance_to(self, deadline: float) -> None:
        """Run everything due up to and including `deadline`."""
        while self._heap and self._heap[0][0] <= deadline:
            self.run_one()
        self.now = max(self.now, deadline)

    def run_until(
        self,
        predicate: Callable[[], bool],
        max_time: float = 3600.0,
    ) -> bool:
        """Run until `predicate` holds; False if time or work ran out first."""
        if predicate():
            return True
        while self._heap and self.now <= max_time:
            self.run_one()
            if predicate():
                return True
        return predicate()

    def run_until_complete(self, task: SimFuture, max_time: float = 3600.0) -> Any:
        ok = self.run_until(task.done, max_time)
        if not ok:
            raise TimeoutError(f"task not finished by sim time {max_time}")
        return task.result()
