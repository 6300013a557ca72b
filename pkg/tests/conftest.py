"""Shared builders for small hand-checkable scenarios."""

import pytest

from ttms.models import AppModel, Message, PlatformModel, Task, link_key


def make_app(wcets, edges=(), messages=(), deadline=1000):
    """AppModel from wcet map {task_id: wcet}, precedence edge list and
    (msg_id, tx, rx, size) tuples."""
    preds = {t: set() for t in wcets}
    for u, v in edges:
        preds[v].add(u)
    tasks = {t: Task(task_id=t, wcet=w, predecessors=frozenset(preds[t]))
             for t, w in wcets.items()}
    msgs = {m[0]: Message(msg_id=m[0], tx_task=m[1], rx_task=m[2],
                          msg_size=m[3]) for m in messages}
    return AppModel(tasks=tasks, messages=msgs, deadline=deadline)


def make_platform(n_es, direct_links=(), routers=(), router_links=()):
    """Platform with end systems 1..n_es, optional direct ES-ES links,
    router nodes and arbitrary extra links."""
    end_systems = {i: True for i in range(1, n_es + 1)}
    router_map = {r: True for r in routers}
    links = {}
    for a, b in direct_links:
        links[link_key(a, b)] = True
    for a, b in router_links:
        links[link_key(a, b)] = True
    return PlatformModel(end_systems=end_systems, routers=router_map,
                         links=links)


@pytest.fixture
def chain_app():
    # T1 -> T2 -> T3 with wcets 3, 2, 4
    return make_app({1: 3, 2: 2, 3: 4}, edges=[(1, 2), (2, 3)])


@pytest.fixture
def diamond_app():
    # T1 -> {T2, T3} -> T4 with wcets 2, 3, 5, 1
    return make_app({1: 2, 2: 3, 3: 5, 4: 1},
                    edges=[(1, 2), (1, 3), (2, 4), (3, 4)])


@pytest.fixture
def single_es():
    return make_platform(1)


@pytest.fixture
def five_es_star():
    # ES1..ES5 all attached to router 10
    return make_platform(5, routers=(10,),
                         router_links=[(i, 10) for i in range(1, 6)])
