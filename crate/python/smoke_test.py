"""Smoke test for the activerods extension module."""

import math

import activerods as ar


def main():
    eps = 0.05
    speed = ar.Coefficient.shifted_sine(1.0, 0.5)
    turning = ar.Coefficient.shear_turning(0.5)
    model = ar.Model(eps, 0.2, 0.5, speed, turning)
    grid = ar.Grid(6.0, 64, 32, layer_width=8 * eps, layer_cells=16)

    f0 = ar.Field.exponential(grid)
    (f,) = ar.run_full(f0, model, [0.5])
    assert abs(f.mass() - f0.mass()) < 1e-10 * f0.mass()

    (bulk, wall), = ar.run_limit(f0, model, [0.5])
    h = 2 * math.pi / grid.n_phi
    combined = bulk.mass() + h * sum(wall)
    assert abs(combined - f0.mass()) < 1e-10

    m, u = ar.decompose(f, speed, eps)
    assert len(m) == grid.n_phi and all(v > 0 for v in m)

    layer = ar.Field.steady_layer(grid, ar.Coefficient.constant(1.0), eps)
    still = ar.Model(eps, 0.5, 1.0, ar.Coefficient.constant(1.0), ar.Coefficient.constant(0.0))
    (g,) = ar.run_full(layer, still, [1.0])
    assert g.l1_distance(layer) < 1e-6

    assert abs(ar.epsilon_from_physical(2e3, 3.0, 1e3) - 6.6667e-4) < 1e-7

    stalled = ar.Model(eps, 0.2, 0.5, ar.Coefficient.shifted_sine(-1.0, 0.2), turning)
    try:
        ar.run_full(f0, stalled, [0.1])
    except ValueError as e:
        assert "assumption" in str(e)
    else:
        raise AssertionError("stalled speed was accepted")

    print("activerods smoke test passed:", f)


if __name__ == "__main__":
    main()
