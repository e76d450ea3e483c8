from __future__ import annotations

import threading

import pytest

from assigncraft.domain import AllProvidersFailed
from assigncraft.router import (
    CompletionRequest,
    ProviderProfile,
    Router,
    ScriptEntry,
    ScriptedProvider,
    UnknownProvider,
)

REQ = CompletionRequest(prompt="hello", tag="main")


class FakeClock:
    def __init__(self, start: float = 1000.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


def test_forced_failover_a_to_b():
    router = Router()
    router.register_scripted_provider(
        [ScriptEntry.fail("server_error")], provider_id="A", priority=0, max_retries=0
    )
    router.register_scripted_provider([ScriptEntry.ok("from B")], provider_id="B", priority=1)
    response = router.route(REQ)
    assert response.provider_id == "B"
    assert response.text == "from B"
    assert len(response.attempts) == 2
    assert [a.outcome for a in response.attempts] == ["server_error", "ok"]


def test_single_healthy_provider_is_chosen():
    router = Router()
    router.register_scripted_provider([ScriptEntry.ok("only")], provider_id="solo")
    assert router.route(REQ).provider_id == "solo"


def test_equal_priority_round_robin_balances_exactly():
    router = Router()
    a = router.register_scripted_provider(
        [ScriptEntry.ok("a")] * 10, provider_id="A", priority=0
    )
    a2 = router.register_scripted_provider(
        [ScriptEntry.ok("a2")] * 10, provider_id="A2", priority=0
    )
    for _ in range(10):
        router.route(REQ)
    assert a.call_count == 5
    assert a2.call_count == 5
    assert router.served_calls("A") == 5
    assert router.served_calls("A2") == 5


def test_retry_same_provider_then_succeed():
    router = Router()
    provider = router.register_scripted_provider(
        [ScriptEntry.fail("timeout"), ScriptEntry.ok("Y")], provider_id="solo", max_retries=1
    )
    response = router.route(REQ)
    assert response.text == "Y"
    assert response.provider_id == "solo"
    assert len(response.attempts) == 2
    assert provider.call_count == 2


def test_non_retryable_failure_moves_on_without_retry():
    router = Router()
    bad = router.register_scripted_provider(
        [ScriptEntry.fail("bad_request")], provider_id="A", priority=0, max_retries=3
    )
    router.register_scripted_provider([ScriptEntry.ok("B")], provider_id="B", priority=1)
    response = router.route(REQ)
    assert response.provider_id == "B"
    assert bad.call_count == 1


def test_all_providers_failed_carries_attempt_log():
    router = Router()
    router.register_scripted_provider(
        [ScriptEntry.fail("timeout", "t1"), ScriptEntry.fail("server_error", "t2")],
        provider_id="A",
        max_retries=1,
    )
    with pytest.raises(AllProvidersFailed) as info:
        router.route(REQ)
    log = info.value.attempts
    assert [(a.provider_id, a.outcome) for a in log] == [("A", "timeout"), ("A", "server_error")]


def test_script_exhausted_is_a_failure():
    router = Router()
    provider = router.register_scripted_provider([ScriptEntry.ok("once")], provider_id="A", max_retries=0)
    assert router.route(REQ).text == "once"
    with pytest.raises(AllProvidersFailed):
        router.route(REQ)
    assert provider.call_count == 2


def test_scripted_provider_records_every_call():
    provider = ScriptedProvider([ScriptEntry.ok("x"), ScriptEntry.ok("y")])
    provider(CompletionRequest(prompt="p1", tag="t1"), 1.0)
    provider(CompletionRequest(prompt="p2", tag="t2"), 1.0)
    assert provider.call_tags() == ["t1", "t2"]
    assert provider.calls_for_tag("t1") == 1


# --- breaker -----------------------------------------------------------------


def test_breaker_opens_after_exactly_three_consecutive_failures():
    clock = FakeClock()
    router = Router(clock=clock)
    router.register_scripted_provider([], provider_id="A")
    router.record_outcome("A", False, 10)
    assert router.health("A").open_until is None
    router.record_outcome("A", False, 10)
    assert router.health("A").open_until is None
    health = router.record_outcome("A", False, 10)
    assert health.consecutive_failures == 3
    assert health.open_until == clock.now + 30.0


def test_open_breaker_blocks_calls_until_cooldown_passes():
    clock = FakeClock()
    router = Router(clock=clock)
    provider = router.register_scripted_provider(
        [ScriptEntry.fail("server_error")] * 3 + [ScriptEntry.ok("back")],
        provider_id="A",
        max_retries=2,
    )
    with pytest.raises(AllProvidersFailed):
        router.route(REQ)  # three tries, breaker opens
    assert provider.call_count == 3
    with pytest.raises(AllProvidersFailed) as info:
        router.route(REQ)  # blocked: no call reaches the provider
    assert provider.call_count == 3
    assert [a.outcome for a in info.value.attempts] == ["skipped"]
    clock.advance(30.001)
    response = router.route(REQ)  # cooldown over: half-open try succeeds
    assert response.text == "back"
    assert provider.call_count == 4
    health = router.health("A")
    assert health.open_until is None
    assert health.consecutive_failures == 0


def test_success_resets_failure_counter():
    router = Router(clock=FakeClock())
    router.register_scripted_provider([], provider_id="A")
    router.record_outcome("A", False, 10)
    router.record_outcome("A", False, 10)
    health = router.record_outcome("A", True, 10)
    assert health.consecutive_failures == 0
    assert health.open_until is None


def test_ema_latency_hand_computed():
    router = Router(clock=FakeClock())
    router.register_scripted_provider([], provider_id="A")
    router.record_outcome("A", True, 100)  # init
    assert router.health("A").ema_latency_ms == 100.0
    router.record_outcome("A", True, 200)  # 0.2*200 + 0.8*100 = 120
    assert router.health("A").ema_latency_ms == pytest.approx(120.0)


def test_record_outcome_unknown_provider():
    router = Router()
    with pytest.raises(UnknownProvider):
        router.record_outcome("ghost", True, 1)


# --- registry invariants -------------------------------------------------------


def test_duplicate_provider_id_rejected():
    router = Router()
    router.register_scripted_provider([], provider_id="A")
    with pytest.raises(ValueError):
        router.register_scripted_provider([], provider_id="A")


def test_timeout_floor_enforced():
    with pytest.raises(ValueError):
        ProviderProfile(provider_id="x", model_name="m", timeout_ms=999)


def test_accounting_conservation_under_concurrency():
    router = Router()
    router.register_scripted_provider([ScriptEntry.ok("a")] * 200, provider_id="A", priority=0)
    router.register_scripted_provider([ScriptEntry.ok("b")] * 200, provider_id="B", priority=0)
    successes = []

    def worker():
        for _ in range(20):
            successes.append(router.route(REQ).provider_id)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    total_served = router.served_calls("A") + router.served_calls("B")
    assert total_served == len(successes) == 160
    # exact balance: the round-robin counter is shared and atomic
    assert router.served_calls("A") == 80
    assert router.served_calls("B") == 80


def test_priority_order_preferred_first():
    router = Router()
    low = router.register_scripted_provider([ScriptEntry.ok("low")] * 5, provider_id="low", priority=0)
    high = router.register_scripted_provider([ScriptEntry.ok("high")] * 5, provider_id="high", priority=9)
    for _ in range(5):
        assert router.route(REQ).provider_id == "low"
    assert low.call_count == 5
    assert high.call_count == 0
