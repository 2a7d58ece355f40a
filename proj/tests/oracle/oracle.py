"""Reference computations whose outputs are frozen into the C++ tests.

Written independently of the C++ sources, using exact rationals where the
model allows it. Run: python3 tests/oracle/oracle.py
"""
from fractions import Fraction as F
import math
import random

INPUT_OHMS = F(3125)
STEP_OHMS = F(50000, 128)


def trunc_div(a, b):
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


def predict(prev, last, p, max_count=4095):
    return [min(max(l + trunc_div(l - q, p), 0), max_count) for q, l in zip(prev, last)]


def adc(v_out, v_ref, bits):
    full = (1 << bits) - 1
    return min(max(math.floor(F(v_out) / F(v_ref) * full + F(1, 2)), 0), full)


def raw_voltage(force, r0=F(50000), k_low=F(4, 10**7), k_high=F(16, 10**8), brk=F(100),
                v_ref=F(9, 10), v_supply=F(33, 10)):
    force = F(force)
    g = 1 / r0 + (k_low * force if force <= brk else k_low * brk + k_high * (force - brk))
    r = 1 / g
    return v_ref + (v_supply - v_ref) * (1 - r / r0)


def calibration(ratio_denominator):
    v_ref = F(1)
    v_min = v_ref * (1 - F(1, 1) / F(ratio_denominator))
    solved = INPUT_OHMS * v_ref / (v_ref - v_min)
    steps = min(max(math.floor(solved / STEP_OHMS), 1), 128)
    return solved, steps, steps * STEP_OHMS


def idle_current(continuous, t_a, ext):
    i = (F(continuous) / (1 + F(ext)) - F(t_a) * F(continuous)) / (1 - F(t_a))
    return F(math.floor(i * 100), 100)


def shadow_replay(frames, p, d):
    """Device intermittent logic; returns (sent flags, receiver view)."""
    sent, view = [], []
    for k, actual in enumerate(frames):
        if k < 2:
            send = True
        else:
            pred = predict(view[-2], view[-1], p)
            send = sum(abs(a - b) for a, b in zip(actual, pred)) > d * len(actual)
        sent.append(send)
        view.append(list(actual) if send else pred)
    return sent, view


def main():
    print("predict", predict([100], [129], 29), predict([130], [100], 29))
    rng = random.Random(2024)
    vectors = []
    for _ in range(8):
        p = rng.randint(1, 50)
        prev = [rng.randint(0, 4095) for _ in range(4)]
        last = [rng.randint(0, 4095) for _ in range(4)]
        vectors.append((p, prev, last, predict(prev, last, p)))
    print("predict vectors")
    for v in vectors:
        print("   ", v)

    print("adc", adc(0, 0.9, 12), adc(F(9, 10), F(9, 10), 12), adc(F(9, 20), F(9, 10), 12))
    for f in (0, 10, 100, 250, 10000):
        print("raw_voltage", f, float(raw_voltage(f)))
    print("within 1% at 100x break:", float((F(33, 10) - raw_voltage(10000)) / F(33, 10)))

    for den in (F(9, 2), F(23, 8)):
        print("calibration", den, [float(x) if isinstance(x, F) else x for x in calibration(den)])

    for name, c in (("wifi", F(15247, 100)), ("ble", F(10131, 100))):
        ext = F(42, 100) if name == "wifi" else F(20, 100)
        i_idle = idle_current(c, F(1, 100), ext)
        delta = c - i_idle
        avg = i_idle + delta * F(1, 100)
        print(name, "iIdle", float(i_idle), "delta", float(delta), "ext%", float(100 * (c / avg - 1)),
              "hours@1", float(F(1200) / c))

    # Offset of 41 counts at 12 bits.
    print("nrmse offset 41", 41 / 4095)

    # Intermittent replay on a fixed synthetic trace.
    trace = [[100, 100], [100, 100], [101, 99], [140, 99], [140, 100], [141, 100], [141, 101], [400, 0]]
    for p, d in ((1, 0), (2, 1), (29, 26), (5, 20)):
        sent, view = shadow_replay(trace, p, d)
        sq = sum((a - b) ** 2 for fa, fb in zip(view, trace) for a, b in zip(fa, fb))
        e = math.sqrt(sq / (len(trace) * 2)) / 4095
        print("replay", (p, d), "sent", [int(s) for s in sent], "r", sum(sent) / len(trace), "E", repr(e))

    # Contention loss curve: espnow capacity 40 fps, coefficient 0.6, base 0.002.
    for load in (20, 40, 60, 80):
        print("espnow loss at", load, "fps:", min(1, 0.002 + 0.6 * max(0, load / 40 - 1)))


if __name__ == "__main__":
    main()
