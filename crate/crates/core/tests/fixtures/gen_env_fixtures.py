"""Independent reference values for the single-step environment fixtures.

Written directly from the public classic-control definitions; shares no code
with the Rust implementation. Run with `python3 gen_env_fixtures.py`.
"""
import math

# CartPole: explicit Euler, tau = 0.02
def cartpole_step(s, action):
    x, x_dot, th, th_dot = s
    g, mc, mp, l, fmag, tau = 9.8, 1.0, 0.1, 0.5, 10.0, 0.02
    total = mc + mp
    pml = mp * l
    f = fmag if action == 1 else -fmag
    c, sn = math.cos(th), math.sin(th)
    temp = (f + pml * th_dot ** 2 * sn) / total
    thacc = (g * sn - c * temp) / (l * (4.0 / 3.0 - mp * c ** 2 / total))
    xacc = temp - pml * thacc * c / total
    return [x + tau * x_dot, x_dot + tau * xacc, th + tau * th_dot, th_dot + tau * thacc]

def mountaincar_step(s, action):
    p, v = s
    v += (action - 1) * 0.001 + math.cos(3 * p) * (-0.0025)
    v = min(max(v, -0.07), 0.07)
    p += v
    p = min(max(p, -1.2), 0.6)
    if p == -1.2 and v < 0:
        v = 0.0
    return [p, v]

def acro_dsdt(y, a):
    m1 = m2 = 1.0; l1 = 1.0; lc1 = lc2 = 0.5; i1 = i2 = 1.0; g = 9.8
    t1, t2, d1_, d2_ = y
    d1 = m1 * lc1 ** 2 + m2 * (l1 ** 2 + lc2 ** 2 + 2 * l1 * lc2 * math.cos(t2)) + i1 + i2
    d2 = m2 * (lc2 ** 2 + l1 * lc2 * math.cos(t2)) + i2
    phi2 = m2 * lc2 * g * math.cos(t1 + t2 - math.pi / 2.0)
    phi1 = (-m2 * l1 * lc2 * d2_ ** 2 * math.sin(t2)
            - 2 * m2 * l1 * lc2 * d2_ * d1_ * math.sin(t2)
            + (m1 * lc1 + m2 * l1) * g * math.cos(t1 - math.pi / 2) + phi2)
    dd2 = (a + d2 / d1 * phi1 - m2 * l1 * lc2 * d1_ ** 2 * math.sin(t2) - phi2) / (
        m2 * lc2 ** 2 + i2 - d2 ** 2 / d1)
    dd1 = -(d2 * dd2 + phi1) / d1
    return [d1_, d2_, dd1, dd2]

def wrap(x, lo, hi):
    diff = hi - lo
    while x > hi:
        x -= diff
    while x < lo:
        x += diff
    return x

def acrobot_step(s, action):
    a = [-1.0, 0.0, 1.0][action]
    dt = 0.2
    k1 = acro_dsdt(s, a)
    k2 = acro_dsdt([s[i] + dt / 2 * k1[i] for i in range(4)], a)
    k3 = acro_dsdt([s[i] + dt / 2 * k2[i] for i in range(4)], a)
    k4 = acro_dsdt([s[i] + dt * k3[i] for i in range(4)], a)
    ns = [s[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(4)]
    ns[0] = wrap(ns[0], -math.pi, math.pi)
    ns[1] = wrap(ns[1], -math.pi, math.pi)
    ns[2] = min(max(ns[2], -4 * math.pi), 4 * math.pi)
    ns[3] = min(max(ns[3], -9 * math.pi), 9 * math.pi)
    return ns

def obs(ns):
    return [math.cos(ns[0]), math.sin(ns[0]), math.cos(ns[1]), math.sin(ns[1]), ns[2], ns[3]]

def show(name, v):
    print(name, "[" + ", ".join(repr(x) for x in v) + "]")

show("cartpole zero a1", cartpole_step([0, 0, 0, 0], 1))
show("cartpole mixed a0", cartpole_step([0.01, -0.2, 0.03, 0.4], 0))
show("mountaincar -0.5 a1", mountaincar_step([-0.5, 0.0], 1))
show("mountaincar -1.19 a0", mountaincar_step([-1.19, -0.02], 0))
show("mountaincar 0.45 a2", mountaincar_step([0.45, 0.06], 2))
ns = acrobot_step([0.1, -0.05, 0.02, 0.03], 2)
show("acrobot internal a2", ns)
show("acrobot obs a2", obs(ns))
ns = acrobot_step([1.0, 2.0, -3.0, 5.0], 0)
show("acrobot internal2 a0", ns)
show("acrobot obs2 a0", obs(ns))
show("acrobot zero a1", acrobot_step([0, 0, 0, 0], 1))
