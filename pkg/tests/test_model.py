import pytest

from catbranch.chain import FiniteChain
from catbranch.errors import (
    AlphaOutOfRange,
    MomentLawMismatch,
    MomentOrderMissing,
    SiteAlreadyCatalyst,
    UnknownSite,
)
from catbranch.model import (
    augment_sites,
    build_model,
    factorial_moments,
    load_model,
    make_catalyst,
    to_config,
)


@pytest.fixture(scope="module")
def chain():
    return FiniteChain([1, 2], [[-1.0, 1.0], [1.0, -1.0]])


def test_factorial_moments_deterministic_three():
    assert factorial_moments({3: 1.0}, 2) == [3.0, 6.0]


def test_factorial_moments_mixture():
    law = {0: 0.25, 4: 0.75}
    m1, m2, m3 = factorial_moments(law, 3)
    assert m1 == pytest.approx(3.0)
    assert m2 == pytest.approx(9.0)
    assert m3 == pytest.approx(18.0)


def test_make_catalyst_validates_parameters(chain):
    with pytest.raises(AlphaOutOfRange):
        make_catalyst(chain, 1, alpha=1.0, beta=1.0, n_max=1, moments=[1.0])
    with pytest.raises(AlphaOutOfRange):
        make_catalyst(chain, 1, alpha=0.5, beta=0.0, n_max=1, moments=[1.0])
    with pytest.raises(UnknownSite):
        make_catalyst(chain, 7, alpha=0.5, beta=1.0, n_max=1, moments=[1.0])
    with pytest.raises(MomentOrderMissing):
        make_catalyst(chain, 1, alpha=0.5, beta=1.0, n_max=2, moments=[3.0])


def test_law_and_moments_must_agree(chain):
    with pytest.raises(MomentLawMismatch):
        make_catalyst(chain, 1, alpha=0.5, beta=1.0, n_max=1,
                      moments=[2.0], law={0: 0.25, 4: 0.75})
    cat = make_catalyst(chain, 1, alpha=0.5, beta=1.0, n_max=2,
                        law={0: 0.25, 4: 0.75})
    assert cat.mean == pytest.approx(3.0)
    assert cat.moment(2) == pytest.approx(9.0)


def test_law_must_be_probability_vector(chain):
    with pytest.raises(MomentLawMismatch):
        make_catalyst(chain, 1, alpha=0.5, beta=1.0, n_max=1,
                      law={0: 0.5, 2: 0.6})


def test_duplicate_catalyst_site_rejected(chain):
    cat = {"site": 1, "alpha": 0.5, "beta": 1.0, "moments": [3.0]}
    with pytest.raises(UnknownSite):
        build_model(chain, [cat, dict(cat)])


def test_config_round_trip(two_state_model):
    again = load_model(to_config(two_state_model))
    assert again.sites == two_state_model.sites
    assert again.n_max == two_state_model.n_max
    for a, b in zip(again.catalysts, two_state_model.catalysts):
        assert a.moments == pytest.approx(b.moments)
        assert a.law == b.law


def test_lattice_config_round_trip(z_two_model):
    again = load_model(to_config(z_two_model))
    assert again.chain.dim == 1
    assert again.chain.kernel == z_two_model.chain.kernel
    assert again.sites == z_two_model.sites


def test_with_means_keeps_higher_moments(two_state_model):
    swapped = two_state_model.with_means([0.5])
    assert swapped.catalysts[0].mean == pytest.approx(0.5)
    assert swapped.catalysts[0].moments[1:] == two_state_model.catalysts[0].moments[1:]
    assert swapped.catalysts[0].law is None


def test_augment_sites_adds_inert_catalysts(two_state_model):
    bigger = augment_sites(two_state_model, x="u")
    assert bigger.n_catalysts == two_state_model.n_catalysts + 1
    extra = bigger.catalysts[-1]
    assert extra.site == "u"
    assert extra.alpha == 0.0
    assert extra.mean == 0.0
    with pytest.raises(SiteAlreadyCatalyst):
        augment_sites(two_state_model, x="w")
    with pytest.raises(SiteAlreadyCatalyst):
        augment_sites(two_state_model, x="u", y="u")
