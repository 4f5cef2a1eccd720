"""Recompute the reference constants frozen in tests/test_acceptance.py.

Independent of the package: plain mpmath quadrature at 30 digits.
Usage: python3 tools/oracles.py
"""
import mpmath as mp

mp.mp.dps = 30


def gaussian_mean(f):
    return mp.quad(lambda x: f(x) * mp.e ** (-x * x), [-mp.inf, -1, 0, 0.5, 1, mp.inf]) / mp.sqrt(mp.pi)


def disc_mean(R):
    # average of |x|/(1+|x|) over the disc of radius R, integrating out y
    R = mp.mpf(R)
    g = lambda x: 2 * mp.sqrt(R * R - x * x) * abs(x) / (1 + abs(x))
    return mp.quad(g, [-R, 0, R]) / (mp.pi * R * R)


def main():
    funcs = {
        "cos(x0)": mp.cos,
        "1/(1+x0^2)": lambda x: 1 / (1 + x * x),
        "atan(x0)+0.3": lambda x: mp.atan(x) + mp.mpf("0.3"),
        "exp(-abs(x0))": lambda x: mp.e ** (-abs(x)),
        "indicator(x0 >= 0.5)": lambda x: 1 if x >= 0.5 else 0,
    }
    for name, f in funcs.items():
        print(f"gaussian mean  {name:<22} {mp.nstr(gaussian_mean(f), 15)}")
    print(f"sin oscillation          {mp.nstr(2 / (5 * mp.pi), 15)}")
    print(f"cone over cubes          {mp.nstr(mp.tan(mp.pi / 8) / 2, 15)}")
    print(f"cone rotated, flag kept  {mp.nstr((1 - mp.tan(mp.pi / 8)) / 2, 15)}")
    for n in (10, 30, 50, 100):
        print(f"disc mean index {n:<8} {mp.nstr(disc_mean(n + 1), 12)}")


if __name__ == "__main__":
    main()
