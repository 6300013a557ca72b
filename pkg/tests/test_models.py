import numpy as np
import pytest

from ttms.models import (
    AppModel,
    ContextEvent,
    ContextModel,
    CycleDetectedError,
    EventKind,
    FieldOverflowError,
    PlatformExhaustedError,
    Task,
    UnknownHardwareError,
    UnknownTaskError,
    apply_failure,
    apply_mode_change,
    apply_slack,
    context_word_from_bytes,
    context_word_to_bytes,
    decode_context_word,
    effective_wcet,
    encode_context_word,
    frequency_scale,
    link_key,
    slack_fraction,
)

from conftest import make_app, make_platform

# computed with an independent shift/or oracle before the implementation
WORKED_EVENT = ContextEvent(kind=1, value=3, affected_task=42, timestamp=500,
                            hw_id=7)
WORKED_WORD = 740982023


def test_encode_zero_event():
    assert encode_context_word(ContextEvent(kind=0)) == 0


def test_encode_worked_word():
    assert encode_context_word(WORKED_EVENT) == WORKED_WORD


def test_encode_all_ones_saturates():
    ev = ContextEvent(kind=7, value=7, affected_task=1023, timestamp=1023,
                      hw_id=63)
    assert encode_context_word(ev) == 4294967295


@pytest.mark.parametrize("field,value", [
    ("kind", 8), ("value", 8), ("affected_task", 1024), ("timestamp", 1024),
    ("hw_id", 64),
])
def test_encode_overflow_names_field(field, value):
    ev = ContextEvent(**{**dict(kind=0, value=0, affected_task=0, timestamp=0,
                                hw_id=0), field: value})
    with pytest.raises(FieldOverflowError, match=field):
        encode_context_word(ev)


def test_decode_zero_and_worked():
    assert decode_context_word(0) == ContextEvent(kind=0)
    assert decode_context_word(WORKED_WORD) == WORKED_EVENT


def test_roundtrip_randomized():
    rng = np.random.default_rng(0)
    for _ in range(2000):
        ev = ContextEvent(kind=int(rng.integers(8)),
                          value=int(rng.integers(8)),
                          affected_task=int(rng.integers(1024)),
                          timestamp=int(rng.integers(1024)),
                          hw_id=int(rng.integers(64)))
        assert decode_context_word(encode_context_word(ev)) == ev


def test_roundtrip_exhaustive_per_field():
    # sweep each field over its full width with the others pinned
    base = dict(kind=5, value=2, affected_task=700, timestamp=900, hw_id=33)
    widths = dict(kind=3, value=3, affected_task=10, timestamp=10, hw_id=6)
    for name, width in widths.items():
        for v in range(1 << width):
            ev = ContextEvent(**{**base, name: v})
            assert decode_context_word(encode_context_word(ev)) == ev


def test_field_masks_partition_all_32_bits():
    maxed = [ContextEvent(kind=7), ContextEvent(kind=0, value=7),
             ContextEvent(kind=0, affected_task=1023),
             ContextEvent(kind=0, timestamp=1023),
             ContextEvent(kind=0, hw_id=63)]
    words = [encode_context_word(e) for e in maxed]
    combined = 0
    for i, w in enumerate(words):
        for v in words[i + 1:]:
            assert w & v == 0
        combined |= w
    assert combined == 0xFFFFFFFF


def test_word_bytes_big_endian():
    assert context_word_to_bytes(0x01020304) == b"\x01\x02\x03\x04"
    assert context_word_from_bytes(b"\x01\x02\x03\x04") == 0x01020304
    assert context_word_from_bytes(context_word_to_bytes(WORKED_WORD)) == WORKED_WORD


def test_value_mappings():
    assert [slack_fraction(v) for v in range(8)] == [
        0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875]
    assert [frequency_scale(v) for v in range(8)] == [
        1.0, 0.875, 0.75, 0.625, 0.5, 0.375, 0.25, 0.125]


# -- slack ------------------------------------------------------------------

def slack_event(task, value, ts=0):
    return ContextEvent(kind=EventKind.SLACK, value=value, affected_task=task,
                        timestamp=ts)


def test_apply_slack_halves_wcet():
    am = make_app({1: 10})
    out = apply_slack(am, slack_event(1, 4))  # 50%
    assert out.tasks[1].wcet == 5
    assert am.tasks[1].wcet == 10  # input untouched


def test_apply_slack_zero_is_identity():
    am = make_app({1: 10, 2: 3})
    out = apply_slack(am, slack_event(2, 0))
    assert out.tasks == am.tasks
    assert out is not am


def test_apply_slack_floors_at_one():
    am = make_app({1: 1})
    out = apply_slack(am, slack_event(1, 7))  # 87.5%
    assert out.tasks[1].wcet == 1


def test_apply_slack_unknown_task():
    with pytest.raises(UnknownTaskError):
        apply_slack(make_app({1: 5}), slack_event(9, 2))


def test_apply_slack_wrong_kind():
    with pytest.raises(ValueError):
        apply_slack(make_app({1: 5}), ContextEvent(kind=EventKind.FAILURE))


# -- failure ----------------------------------------------------------------

def test_apply_failure_es(five_es_star):
    hw = five_es_star.hw_id_of("es", 3)
    ev = ContextEvent(kind=EventKind.FAILURE, hw_id=hw)
    out = apply_failure(five_es_star, ev)
    assert out.end_systems[3] is False
    assert len(out.available_es()) == 4
    assert five_es_star.end_systems[3] is True  # input untouched


def test_apply_failure_idempotent(five_es_star):
    hw = five_es_star.hw_id_of("es", 3)
    ev = ContextEvent(kind=EventKind.FAILURE, hw_id=hw)
    once = apply_failure(five_es_star, ev)
    twice = apply_failure(once, ev)
    assert twice.end_systems == once.end_systems
    assert twice.links == once.links


def test_apply_failure_sole_es_exhausts(single_es):
    hw = single_es.hw_id_of("es", 1)
    with pytest.raises(PlatformExhaustedError):
        apply_failure(single_es, ContextEvent(kind=EventKind.FAILURE, hw_id=hw))


def test_apply_failure_router_and_link(five_es_star):
    r = five_es_star.hw_id_of("router", 10)
    out = apply_failure(five_es_star,
                        ContextEvent(kind=EventKind.FAILURE, hw_id=r))
    assert out.routers[10] is False
    l = five_es_star.hw_id_of("link", (1, 10))
    out = apply_failure(five_es_star,
                        ContextEvent(kind=EventKind.FAILURE, hw_id=l))
    assert out.links[link_key(1, 10)] is False
    assert out.link_available((1, 10)) is False


def test_apply_failure_unknown_hw(five_es_star):
    with pytest.raises(UnknownHardwareError):
        apply_failure(five_es_star,
                      ContextEvent(kind=EventKind.FAILURE, hw_id=63))


def test_hardware_index_ordering(five_es_star):
    idx = five_es_star.hardware_index()
    kinds = [k for k, _ in idx]
    assert kinds == ["es"] * 5 + ["router"] + ["link"] * 5
    for hw_id, (kind, key) in enumerate(idx):
        assert five_es_star.hw_id_of(kind, key) == hw_id
        assert five_es_star.resolve_hw(hw_id) == (kind, key)


# -- mode change ------------------------------------------------------------

def test_mode_change_identity():
    am = make_app({1: 4, 2: 5})
    pm = make_platform(2, direct_links=[(1, 2)])
    am2, pm2 = apply_mode_change(am, pm,
                                 ContextEvent(kind=EventKind.MODE_CHANGE,
                                              value=0))
    assert pm2.frequency_scale == 1.0
    assert effective_wcet(am2.tasks[1].wcet, pm2.frequency_scale) == 4
    assert pm.frequency_scale == 1.0


def test_mode_change_half_speed():
    am = make_app({1: 4, 2: 5})
    pm = make_platform(2, direct_links=[(1, 2)])
    am2, pm2 = apply_mode_change(am, pm,
                                 ContextEvent(kind=EventKind.MODE_CHANGE,
                                              value=4))
    assert pm2.frequency_scale == 0.5
    assert effective_wcet(am2.tasks[1].wcet, pm2.frequency_scale) == 8
    assert effective_wcet(am2.tasks[2].wcet, pm2.frequency_scale) == 10


# -- model validation -------------------------------------------------------

def test_context_model_ordering():
    cm = ContextModel(events=[ContextEvent(kind=0, timestamp=5),
                              ContextEvent(kind=0, timestamp=3)])
    with pytest.raises(ValueError):
        cm.validate()


def test_effective_predecessors_include_message_senders():
    am = make_app({1: 2, 2: 2}, messages=[(0, 1, 2, 3)])
    assert am.effective_predecessors(2) == {1}


def test_cycle_detected():
    am = make_app({1: 2, 2: 2}, edges=[(1, 2), (2, 1)])
    with pytest.raises(CycleDetectedError):
        am.topological_order()


def test_task_start_requires_es():
    am = AppModel(tasks={1: Task(task_id=1, wcet=2, start_time=3)},
                  messages={}, deadline=10)
    with pytest.raises(ValueError):
        am.validate()
