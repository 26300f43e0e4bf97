import pytest

from latkit import build_lattice, compute_arc_posteriors


def make_branch_lattice(strong: str = "a"):
    """Two start branches {the, a} converging on "cat sat on", then two
    middle alternatives {a, the} converging on "mat".

    The branch named by ``strong`` gets the better acoustic score, so its
    paths carry more posterior mass. With order-3 expansion "cat" splits
    into two copies, "sat" merges back (both paths share the bigram
    ending in "sat"), and "mat" splits into two copies again.
    """
    weak_ac = -14.0
    strong_ac = -6.0
    the_ac = strong_ac if strong == "the" else weak_ac
    a_ac = strong_ac if strong == "a" else weak_ac
    nodes = [
        ("<s>", 0),
        ("the", 20),
        ("a", 20),
        ("cat", 50),
        ("sat", 80),
        ("on", 110),
        ("a", 140),
        ("the", 140),
        ("mat", 170),
        ("</s>", 200),
    ]
    arcs = [
        (0, 1, the_ac, -1.0),
        (0, 2, a_ac, -1.3),
        (1, 3, -10.0, -2.0),
        (2, 3, -10.0, -2.0),
        (3, 4, -9.0, -1.5),
        (4, 5, -8.0, -1.1),
        (5, 6, -7.0, -2.2),
        (5, 7, -7.5, -2.4),
        (6, 8, -6.0, -1.8),
        (7, 8, -6.2, -1.9),
        (8, 9, -4.0, -0.7),
    ]
    return build_lattice("branchy", nodes, arcs)


@pytest.fixture
def fig_branch():
    return make_branch_lattice()


@pytest.fixture
def fig_branch_post():
    return compute_arc_posteriors(make_branch_lattice())


def make_repeat_chain():
    """A chain whose first two words recur much later: a b x y a b z.

    Both occurrences of the bigram share the same order-3 clustering
    history but sit hundreds of frames apart, which is exactly the case
    the timestamped cache level exists for.
    """
    nodes = [
        ("<s>", 0),
        ("a", 10),
        ("b", 20),
        ("x", 30),
        ("y", 40),
        ("a", 400),
        ("b", 410),
        ("z", 420),
        ("</s>", 430),
    ]
    arcs = [
        (i, i + 1, -5.0 - i, -1.0) for i in range(len(nodes) - 1)
    ]
    return build_lattice("repeat", nodes, arcs)


@pytest.fixture
def repeat_chain_post():
    return compute_arc_posteriors(make_repeat_chain())


def make_diamond():
    nodes = [("<s>", 0), ("the", 30), ("a", 32), ("cat", 60), ("</s>", 100)]
    arcs = [
        (0, 1, -10.0, -1.0),
        (0, 2, -12.0, -1.2),
        (1, 3, -20.0, -2.0),
        (2, 3, -19.0, -2.1),
        (3, 4, -5.0, -0.5),
    ]
    return build_lattice("diamond", nodes, arcs)


@pytest.fixture
def diamond():
    return make_diamond()


@pytest.fixture
def diamond_post():
    return compute_arc_posteriors(make_diamond())


def make_chain(words=("hello", "world"), utterance_id="chain"):
    nodes = [("<s>", 0)]
    nodes += [(w, 10 * (i + 1)) for i, w in enumerate(words)]
    nodes.append(("</s>", 10 * (len(words) + 1)))
    arcs = [(i, i + 1, -3.0, -0.5) for i in range(len(nodes) - 1)]
    return build_lattice(utterance_id, nodes, arcs)


@pytest.fixture
def chain():
    return make_chain()
