"""Smoke test for the Python bindings.

    pip install maturin
    maturin develop --release -m crates/python/Cargo.toml
    python python/smoke_test.py
"""

import math

import winguide


def main():
    w = winguide.Window.reference()
    assert w.centroid == [14.0, 15.0, 11.5]
    assert w.contains([14.0, 15.0, 11.5])

    alpha, beta = winguide.bearing_angles([0.0, 0.0, 0.0], w)
    assert len(alpha) == 4 and all(0.0 <= b <= math.pi for b in beta)

    dx, dz = winguide.displacements([1.0, 2.0, 3.0])
    assert abs(dx + 13.0) < 1e-9 and abs(dz + 8.5) < 1e-9

    assert winguide.shaping_gamma(math.pi / 2) == math.pi / 4
    assert winguide.gamma_des(math.pi / 2, math.pi / 2) == math.pi / 4
    assert winguide.shaping_chi(math.pi, 0.0) == 0.0
    chi = winguide.chi_des(beta[0], beta[1], alpha[0], alpha[3])
    gamma = winguide.gamma_des(alpha[0], alpha[3])
    _, w_dot = winguide.lyapunov(-14.0, -11.5, gamma, chi)
    assert w_dot < 0.0

    try:
        winguide.Window([12, 15, 13], [16, 15.5, 13], [16, 15, 10], [12, 15, 10])
    except ValueError:
        pass
    else:
        raise AssertionError("non-coplanar window accepted")

    kin = winguide.run_kinematic([0.0, 0.0, 0.0])
    assert kin["status"] == "traversed" and kin["safe"]

    case1 = winguide.run_case1()
    assert case1["miss"] < 0.1 and 23.5 <= case1["time"] <= 32.0
    print(f"case 1: miss {case1['miss']:.4f} m at t = {case1['time']:.2f} s, {len(case1['t'])} samples")

    noisy = winguide.run_sixdof([0.0, 0.0, 0.0], sigma_deg=4.0, seed=3, trace=False)
    assert noisy["safe"] and noisy["t"] == []

    stats = winguide.run_monte_carlo(n_runs=4, sigma_deg=[2.0, 6.0], master_seed=1)
    assert [round(s["sigma_deg"], 9) for s in stats] == [2.0, 6.0]
    for s in stats:
        print(f"sigma {s['sigma_deg']:.0f} deg: mean miss {s['mean_miss']:.4f} m, success {s['success_rate']:.0%}")

    print("smoke test ok")


if __name__ == "__main__":
    main()
