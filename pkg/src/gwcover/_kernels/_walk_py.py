"""Pure-Python walk loops; draw-for-draw identical to the compiled kernel."""

import math

_BLOCK = 4096


class _Uniforms:
    """Block-buffered ``next_double`` draws that leave the bit generator
    exactly ``consumed`` draws ahead when closed."""

    def __init__(self, rng):
        self.rng = rng
        self.bg = rng.bit_generator
        self.rewind = hasattr(self.bg, "advance")
        self.saved = self.bg.state if self.rewind else None
        self.block = _BLOCK if self.rewind else 1
        self.consumed = 0
        self.buf = []
        self.pos = 0

    def take(self):
        if self.pos == len(self.buf):
            self.consumed += len(self.buf)
            self.buf = self.rng.random(self.block).tolist()
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u

    def close(self):
        if self.rewind:
            used = self.consumed + self.pos
            self.bg.state = self.saved
            self.bg.advance(used)


def _as_list(a):
    return a.tolist() if hasattr(a, "tolist") else list(a)


def _jump(take, x, parent, cstart, nch, lam):
    nu = nch[x]
    if nu == 0:
        return parent[x]
    w = take() * (lam + nu)
    if w < lam:
        return parent[x]
    c = int(w - lam)
    if c >= nu:
        c = nu - 1
    return cstart[x] + c


def cover(rng, parent, cstart, nch, lam):
    nn = len(parent)
    if nn == 1:
        return 0.0, 0, 0.0, 0
    parent, cstart, nch = _as_list(parent), _as_list(cstart), _as_list(nch)
    seen = bytearray(nn)
    seen[0] = 1
    left = nn - 1
    x = 0
    steps = 0
    now = troot = 0.0
    log = math.log
    u = _Uniforms(rng)
    take = u.take
    try:
        while True:
            h = -log(1.0 - take())
            now += h
            if x == 0:
                troot += h
                x = 1
            else:
                x = _jump(take, x, parent, cstart, nch, lam)
            steps += 1
            if not seen[x]:
                seen[x] = 1
                left -= 1
                if left == 0:
                    break
    finally:
        u.close()
    return now, steps, troot, x


def budget(rng, parent, cstart, nch, lam, t, occ):
    parent, cstart, nch = _as_list(parent), _as_list(cstart), _as_list(nch)
    acc = [0.0] * len(parent)
    x = 0
    steps = 0
    now = troot = 0.0
    log = math.log
    u = _Uniforms(rng)
    take = u.take
    try:
        while True:
            h = -log(1.0 - take())
            if x == 0:
                if troot + h >= t:
                    now += t - troot
                    break
                troot += h
                now += h
                x = 1
            else:
                acc[x] += h
                now += h
                x = _jump(take, x, parent, cstart, nch, lam)
            steps += 1
    finally:
        u.close()
    occ[:] = acc
    occ[0] = t
    return now, steps
