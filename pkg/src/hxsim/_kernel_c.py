"""Cycle-level simulation kernel.

This module is written in Cython pure-python mode: compiled (as
hxsim._kernel_c) it is the fast engine core; interpreted it is the
bit-identical pure-Python fallback.  All arithmetic is integer and the RNG
is an explicitly masked splitmix64, so both builds produce identical
results for identical inputs.

Model summary (one cycle, in phase order):
  1. injection     servers generate packets (Bernoulli per cycle) and
                   stream 1 phit/cycle into their switch once 16 phits of
                   credit are available
  2. route compute every ungranted head-of-VC packet with at least its
                   header present scores its candidate (port, VC) pairs by
                   occupancy Q plus penalty P and requests the cheapest
                   admissible one
  3. allocation    every output (port, VC) grants one requester, uniformly
                   at random
  4. crossbar      up to 2 phits per output port per cycle move from input
                   buffers to output queues (internal speedup 2)
  5. link          1 phit per port per cycle leaves the output queue,
                   arriving at the neighbour next cycle; server ports eject
                   to the attached server instead
  6. credit return credits for phits drained from an input buffer reach the
                   upstream switch one cycle later
Ejection consumption, metrics and the deadlock detector piggyback on the
link phase.
"""

import cython
import numpy as np

COMPILED = cython.compiled

MASK64 = cython.declare(cython.ulonglong, 0xFFFFFFFFFFFFFFFF)

# Routing algorithm codes.
ALG_MINIMAL = cython.declare(cython.int, 0)
ALG_DOR = cython.declare(cython.int, 1)
ALG_VALIANT = cython.declare(cython.int, 2)
ALG_OMNIWAR = cython.declare(cython.int, 3)
ALG_POLARIZED = cython.declare(cython.int, 4)
ALG_OMNI_SP = cython.declare(cython.int, 5)
ALG_POL_SP = cython.declare(cython.int, 6)

PKT_LEN = cython.declare(cython.int, 16)
IN_CAP = cython.declare(cython.int, 128)
IN_SLOTS = cython.declare(cython.int, 8)
OUT_CAP = cython.declare(cython.int, 64)
OUT_SLOTS = cython.declare(cython.int, 4)
SPEEDUP = cython.declare(cython.int, 2)

# Packet flag bits.
FL_ESC = cython.declare(cython.int, 1)
FL_VAL2 = cython.declare(cython.int, 2)

# Candidate flag bits.
CF_ESC = cython.declare(cython.int, 1)
CF_DEROUTE = cython.declare(cython.int, 2)

INF32 = cython.declare(cython.int, 2**30)


@cython.cclass
class Sim:
    # -- static tables ------------------------------------------------------
    N: cython.int          # switches
    P: cython.int          # ports per switch (switch + server)
    PSW: cython.int        # switch-to-switch ports
    S: cython.int          # servers per switch
    V: cython.int          # virtual channels
    NDIMS: cython.int
    NSRV: cython.int
    NIU: cython.int        # input units  (sw, port, vc)
    NOU: cython.int        # output units (sw, port, vc)
    NPP: cython.int        # physical ports (sw, port)
    algo: cython.int
    omni_m: cython.int
    surepath: cython.int   # bool
    rv: cython.int         # routing VCs under SurePath (V - 1)
    cmax: cython.int
    diam2: cython.int      # 2 * fault-free-diameter bound for polarized
    debug: cython.int

    nbr: cython.int[:, :]
    nbr_port: cython.int[:, :]
    port_dim: cython.int[:]
    port_val: cython.int[:, :]    # neighbour coordinate value per (sw, port)
    coords: cython.int[:, :]
    dist: cython.int[:, :]
    level: cython.int[:]
    ud: cython.int[:, :]
    dest_table: cython.long[:]    # -1 length-0 slice when uniform
    uniform: cython.int

    pen_deroute: cython.int
    pen_polar: cython.int[:]      # offsets 0/1/2
    pen_up: cython.int
    pen_down: cython.int
    pen_short: cython.int[:]      # reduction 1,2,>=3

    # -- packet pool --------------------------------------------------------
    PCAP: cython.int
    pk_src: cython.int[:]
    pk_dst: cython.int[:]
    pk_dst_sw: cython.int[:]
    pk_src_sw: cython.int[:]
    pk_hop: cython.int[:]
    pk_der: cython.int[:]
    pk_mid: cython.int[:]
    pk_flags: cython.int[:]
    pk_mu: cython.int[:]
    pk_create: cython.long[:]
    free_list: cython.int[:]
    free_top: cython.int

    # -- input units --------------------------------------------------------
    in_ring_pkt: cython.int[:, :]
    in_ring_arr: cython.int[:, :]
    in_head: cython.int[:]
    in_len: cython.int[:]
    in_occ: cython.int[:]
    granted: cython.int[:]
    gr_ou: cython.int[:]
    gr_fwd: cython.int[:]
    gr_slot: cython.int[:]

    # -- output units -------------------------------------------------------
    oq_pkt: cython.int[:, :]
    oq_phits: cython.int[:, :]
    oq_new: cython.int[:, :]
    oq_sent: cython.int[:, :]
    oq_head: cython.int[:]
    oq_len: cython.int[:]
    out_occ: cython.int[:]
    credit: cython.int[:]
    out_reserved: cython.int[:]
    bind_list: cython.int[:, :]
    bind_len: cython.int[:]
    bind_rr: cython.int[:]
    link_rr: cython.int[:]
    touched: cython.int[:]        # (ou * OUT_SLOTS + slot) with oq_new > 0
    touched_n: cython.int

    # -- per-cycle scoring snapshot -----------------------------------------
    q_arr: cython.int[:]
    portq: cython.int[:]

    # -- candidate cache ----------------------------------------------------
    cc_port: cython.int[:, :]
    cc_vc: cython.int[:, :]
    cc_pen: cython.int[:, :]
    cc_flags: cython.int[:, :]
    cc_n: cython.int[:]
    cc_forced: cython.int[:]

    # -- allocator ----------------------------------------------------------
    req_ou: cython.int[:]         # per-iu requested ou (-1 none)
    req_flag: cython.int[:]
    alloc_stamp: cython.long[:]   # per-ou stamp of last request cycle
    alloc_cnt: cython.int[:]
    alloc_win: cython.int[:]
    alloc_wflag: cython.int[:]
    req_ous: cython.int[:]        # distinct requested ous this cycle
    req_ous_n: cython.int

    # -- servers ------------------------------------------------------------
    srv_credit: cython.int[:]
    srv_active: cython.int[:]
    srv_sent: cython.int[:]
    srv_qlen: cython.int[:]
    srv_qhead: cython.int[:]
    srv_queue: cython.long[:, :]
    srv_qcap: cython.int
    srv_gen: cython.long[:]
    srv_consumed: cython.long[:]

    # -- pending (1-cycle delayed) buffers ----------------------------------
    pa_iu: cython.int[:, :]
    pa_n: cython.int[:]
    pc_idx: cython.int[:, :]
    pc_cnt: cython.int[:, :]
    pc_n: cython.int[:]
    pbuf: cython.int              # current fill buffer (0/1)

    # -- run state ----------------------------------------------------------
    rng_state: cython.ulonglong
    cycle: cython.long
    inj_thresh: cython.ulonglong  # per-cycle generation threshold
    in_flight: cython.long
    injected: cython.long
    delivered: cython.long
    idle_cycles: cython.long
    deadlock_limit: cython.long
    deadlocked: cython.int
    unroutable: cython.long
    forced_hops: cython.long
    escape_hops: cython.long
    routing_hops: cython.long
    deroute_hops: cython.long
    hop_sum: cython.long
    meas_start: cython.long
    meas_end: cython.long
    lat_sum: cython.long
    lat_n: cython.long
    consumed_meas: cython.long
    moved: cython.long
    error_code: cython.int

    def __init__(
        self,
        nbr, nbr_port, port_dim, port_val, coords, dist, level, ud,
        sides_unused, servers_per_switch, num_vcs, algo, omni_m,
        dest_table, pen_deroute, pen_polar, pen_up, pen_down, pen_short,
        seed, load_num, load_den, deadlock_limit, diam2, debug,
    ):
        self.nbr = nbr
        self.nbr_port = nbr_port
        self.port_dim = port_dim
        self.port_val = port_val
        self.coords = coords
        self.dist = dist
        self.level = level
        self.ud = ud
        self.N = nbr.shape[0]
        self.PSW = nbr.shape[1]
        self.S = servers_per_switch
        self.P = self.PSW + self.S
        self.V = num_vcs
        self.NDIMS = coords.shape[1]
        self.NSRV = self.N * self.S
        self.NPP = self.N * self.P
        self.NIU = self.NPP * self.V
        self.NOU = self.NPP * self.V
        self.algo = algo
        self.omni_m = omni_m
        self.surepath = 1 if algo >= ALG_OMNI_SP else 0
        self.rv = self.V - 1 if self.surepath else self.V
        self.diam2 = diam2
        self.debug = debug
        self.uniform = 1 if dest_table.shape[0] == 0 else 0
        self.dest_table = dest_table

        self.pen_deroute = pen_deroute
        self.pen_polar = pen_polar
        self.pen_up = pen_up
        self.pen_down = pen_down
        self.pen_short = pen_short

        if self.surepath:
            self.cmax = self.PSW * self.rv + self.PSW
        else:
            self.cmax = self.PSW

        self.PCAP = self.NIU * IN_SLOTS + self.NOU * OUT_SLOTS + self.NSRV + 64
        z = np.zeros
        self.pk_src = z(self.PCAP, dtype=np.intc)
        self.pk_dst = z(self.PCAP, dtype=np.intc)
        self.pk_dst_sw = z(self.PCAP, dtype=np.intc)
        self.pk_src_sw = z(self.PCAP, dtype=np.intc)
        self.pk_hop = z(self.PCAP, dtype=np.intc)
        self.pk_der = z(self.PCAP, dtype=np.intc)
        self.pk_mid = z(self.PCAP, dtype=np.intc)
        self.pk_flags = z(self.PCAP, dtype=np.intc)
        self.pk_mu = z(self.PCAP, dtype=np.intc)
        self.pk_create = z(self.PCAP, dtype=np.int64)
        self.free_list = np.arange(self.PCAP - 1, -1, -1, dtype=np.intc)
        self.free_top = self.PCAP

        self.in_ring_pkt = z((self.NIU, IN_SLOTS), dtype=np.intc)
        self.in_ring_arr = z((self.NIU, IN_SLOTS), dtype=np.intc)
        self.in_head = z(self.NIU, dtype=np.intc)
        self.in_len = z(self.NIU, dtype=np.intc)
        self.in_occ = z(self.NIU, dtype=np.intc)
        self.granted = z(self.NIU, dtype=np.intc)
        self.gr_ou = z(self.NIU, dtype=np.intc)
        self.gr_fwd = z(self.NIU, dtype=np.intc)
        self.gr_slot = z(self.NIU, dtype=np.intc)

        self.oq_pkt = z((self.NOU, OUT_SLOTS), dtype=np.intc)
        self.oq_phits = z((self.NOU, OUT_SLOTS), dtype=np.intc)
        self.oq_new = z((self.NOU, OUT_SLOTS), dtype=np.intc)
        self.oq_sent = z((self.NOU, OUT_SLOTS), dtype=np.intc)
        self.oq_head = z(self.NOU, dtype=np.intc)
        self.oq_len = z(self.NOU, dtype=np.intc)
        self.out_occ = z(self.NOU, dtype=np.intc)
        self.credit = np.full(self.NOU, IN_CAP, dtype=np.intc)
        self.out_reserved = z(self.NPP, dtype=np.intc)
        self.bind_list = z((self.NPP, self.V * OUT_SLOTS), dtype=np.intc)
        self.bind_len = z(self.NPP, dtype=np.intc)
        self.bind_rr = z(self.NPP, dtype=np.intc)
        self.link_rr = z(self.NPP, dtype=np.intc)
        self.touched = z(self.NOU * OUT_SLOTS, dtype=np.intc)
        self.touched_n = 0

        self.q_arr = z(self.NOU, dtype=np.intc)
        self.portq = z(self.NPP, dtype=np.intc)

        self.cc_port = z((self.NIU + 1, self.cmax), dtype=np.intc)
        self.cc_vc = z((self.NIU + 1, self.cmax), dtype=np.intc)
        self.cc_pen = z((self.NIU + 1, self.cmax), dtype=np.intc)
        self.cc_flags = z((self.NIU + 1, self.cmax), dtype=np.intc)
        self.cc_n = np.full(self.NIU + 1, -1, dtype=np.intc)
        self.cc_forced = z(self.NIU + 1, dtype=np.intc)

        self.req_ou = np.full(self.NIU, -1, dtype=np.intc)
        self.req_flag = z(self.NIU, dtype=np.intc)
        self.alloc_stamp = np.full(self.NOU, -1, dtype=np.int64)
        self.alloc_cnt = z(self.NOU, dtype=np.intc)
        self.alloc_win = z(self.NOU, dtype=np.intc)
        self.alloc_wflag = z(self.NOU, dtype=np.intc)
        self.req_ous = z(self.NOU, dtype=np.intc)
        self.req_ous_n = 0

        self.srv_credit = np.full(self.NSRV, IN_CAP, dtype=np.intc)
        self.srv_active = np.full(self.NSRV, -1, dtype=np.intc)
        self.srv_sent = z(self.NSRV, dtype=np.intc)
        self.srv_qlen = z(self.NSRV, dtype=np.intc)
        self.srv_qhead = z(self.NSRV, dtype=np.intc)
        self.srv_qcap = 256
        self.srv_queue = z((self.NSRV, self.srv_qcap), dtype=np.int64)
        self.srv_gen = z(self.NSRV, dtype=np.int64)
        self.srv_consumed = z(self.NSRV, dtype=np.int64)

        pacap = self.NPP + self.NSRV + 64
        self.pa_iu = z((2, pacap), dtype=np.intc)
        self.pa_n = z(2, dtype=np.intc)
        pccap = self.NPP * SPEEDUP + self.NSRV + 64
        self.pc_idx = z((2, pccap), dtype=np.intc)
        self.pc_cnt = z((2, pccap), dtype=np.intc)
        self.pc_n = z(2, dtype=np.intc)
        self.pbuf = 0

        self.rng_state = seed & MASK64
        self.cycle = 0
        # Bernoulli threshold: generate iff rng < load/16 * 2^64, computed
        # without floats for cross-build determinism.
        self.inj_thresh = (load_num * 0x10000000000000000) // (load_den * PKT_LEN)
        self.in_flight = 0
        self.injected = 0
        self.delivered = 0
        self.idle_cycles = 0
        self.deadlock_limit = deadlock_limit
        self.deadlocked = 0
        self.unroutable = 0
        self.forced_hops = 0
        self.escape_hops = 0
        self.routing_hops = 0
        self.deroute_hops = 0
        self.hop_sum = 0
        self.meas_start = 0
        self.meas_end = 0
        self.lat_sum = 0
        self.lat_n = 0
        self.consumed_meas = 0
        self.moved = 0
        self.error_code = 0

    # ------------------------------------------------------------------ rng

    @cython.cfunc
    def _rng(self) -> cython.ulonglong:
        s: cython.ulonglong = (self.rng_state + 0x9E3779B97F4A7C15) & MASK64
        self.rng_state = s
        z: cython.ulonglong = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    @cython.cfunc
    def _rand_below(self, n: cython.int) -> cython.int:
        return cython.cast(cython.int, self._rng() % cython.cast(cython.ulonglong, n))

    # ------------------------------------------------------- small helpers

    @cython.cfunc
    def _alloc_pkt(self) -> cython.int:
        self.free_top -= 1
        return self.free_list[self.free_top]

    @cython.cfunc
    def _free_pkt(self, pkt: cython.int):
        self.free_list[self.free_top] = pkt
        self.free_top += 1

    @cython.cfunc
    def _ring_push(self, iu: cython.int, pkt: cython.int):
        slot: cython.int = (self.in_head[iu] + self.in_len[iu]) % IN_SLOTS
        self.in_ring_pkt[iu, slot] = pkt
        self.in_ring_arr[iu, slot] = 0
        self.in_len[iu] += 1
        if self.in_len[iu] == 1:
            self.cc_n[iu] = -1

    @cython.cfunc
    def _q_of(self, ou: cython.int, port: cython.int) -> cython.int:
        q: cython.int = self.out_occ[ou]
        if port < self.PSW:
            q += IN_CAP - self.credit[ou]
        return q

    # --------------------------------------------------------- phase 0: io

    @cython.cfunc
    def _apply_pending(self):
        prev: cython.int = 1 - self.pbuf
        i: cython.int
        iu: cython.int
        j: cython.int
        slot: cython.int
        # link arrivals from last cycle
        for i in range(self.pa_n[prev]):
            iu = self.pa_iu[prev, i]
            # first not-fully-arrived ring entry receives the phit
            for j in range(self.in_len[iu]):
                slot = (self.in_head[iu] + j) % IN_SLOTS
                if self.in_ring_arr[iu, slot] < PKT_LEN:
                    self.in_ring_arr[iu, slot] += 1
                    break
            self.in_occ[iu] += 1
        self.pa_n[prev] = 0
        # credit returns from last cycle
        idx: cython.int
        for i in range(self.pc_n[prev]):
            idx = self.pc_idx[prev, i]
            if idx >= self.NOU:
                self.srv_credit[idx - self.NOU] += self.pc_cnt[prev, i]
            else:
                self.credit[idx] += self.pc_cnt[prev, i]
        self.pc_n[prev] = 0
        # output-queue phits added last cycle become link-transmittable
        for i in range(self.touched_n):
            self.oq_new[self.touched[i] // OUT_SLOTS, self.touched[i] % OUT_SLOTS] = 0
        self.touched_n = 0

    # -------------------------------------------------- phase 1: injection

    @cython.cfunc
    def _grow_srv_queue(self):
        cap: cython.int = self.srv_qcap
        newq = np.zeros((self.NSRV, cap * 2), dtype=np.int64)
        s: cython.int
        j: cython.int
        for s in range(self.NSRV):
            for j in range(self.srv_qlen[s]):
                newq[s, j] = self.srv_queue[s, (self.srv_qhead[s] + j) % cap]
            self.srv_qhead[s] = 0
        self.srv_queue = newq
        self.srv_qcap = cap * 2

    @cython.cfunc
    def _queue_packet(self, s: cython.int, create: cython.long):
        if self.srv_qlen[s] >= self.srv_qcap:
            self._grow_srv_queue()
        slot: cython.int = (self.srv_qhead[s] + self.srv_qlen[s]) % self.srv_qcap
        self.srv_queue[s, slot] = create
        self.srv_qlen[s] += 1
        if self.meas_start <= create < self.meas_end:
            self.srv_gen[s] += PKT_LEN

    @cython.cfunc
    def _inject(self, generate: cython.int):
        s: cython.int
        pkt: cython.int
        dst: cython.int
        iu: cython.int
        sw: cython.int
        d: cython.int
        for s in range(self.NSRV):
            if generate and self._rng() < self.inj_thresh:
                self._queue_packet(s, self.cycle)
            if self.srv_active[s] < 0 and self.srv_qlen[s] > 0 and self.srv_credit[s] >= PKT_LEN:
                pkt = self._alloc_pkt()
                self.pk_src[pkt] = s
                if self.uniform:
                    d = self._rand_below(self.NSRV - 1)
                    if d >= s:
                        d += 1
                    dst = d
                else:
                    dst = cython.cast(cython.int, self.dest_table[s])
                self.pk_dst[pkt] = dst
                self.pk_dst_sw[pkt] = dst // self.S
                self.pk_src_sw[pkt] = s // self.S
                self.pk_hop[pkt] = 0
                self.pk_der[pkt] = 0
                self.pk_flags[pkt] = 0
                self.pk_mid[pkt] = self._rand_below(self.N) if self.algo == ALG_VALIANT else -1
                self.pk_mu[pkt] = -self.dist[s // self.S, dst // self.S]
                self.pk_create[pkt] = self.srv_queue[s, self.srv_qhead[s]]
                self.srv_qhead[s] = (self.srv_qhead[s] + 1) % self.srv_qcap
                self.srv_qlen[s] -= 1
                self.srv_credit[s] -= PKT_LEN
                self.srv_active[s] = pkt
                self.srv_sent[s] = 0
                sw = s // self.S
                iu = ((sw * self.P + self.PSW + s % self.S) * self.V)
                self._ring_push(iu, pkt)
                self.in_flight += 1
                self.injected += 1
            if self.srv_active[s] >= 0:
                sw = s // self.S
                iu = ((sw * self.P + self.PSW + s % self.S) * self.V)
                cur: cython.int = self.pbuf
                self.pa_iu[cur, self.pa_n[cur]] = iu
                self.pa_n[cur] += 1
                self.srv_sent[s] += 1
                self.moved += 1
                if self.srv_sent[s] == PKT_LEN:
                    self.srv_active[s] = -1

    # ------------------------------------------------ candidate generation

    @cython.cfunc
    def _cc_add(self, row: cython.int, port: cython.int, vc: cython.int,
                pen: cython.int, flags: cython.int):
        n: cython.int = self.cc_n[row]
        self.cc_port[row, n] = port
        self.cc_vc[row, n] = vc
        self.cc_pen[row, n] = pen
        self.cc_flags[row, n] = flags
        self.cc_n[row] = n + 1

    @cython.cfunc
    def _routing_candidates(self, row: cython.int, sw: cython.int, pkt: cython.int):
        """Fill cc row with the base routing candidates (no escape)."""
        dst: cython.int = self.pk_dst_sw[pkt]
        hop: cython.int = self.pk_hop[pkt]
        algo: cython.int = self.algo
        p: cython.int
        b: cython.int
        vc: cython.int
        if algo == ALG_MINIMAL or algo == ALG_VALIANT:
            target: cython.int = dst
            if algo == ALG_VALIANT:
                if (self.pk_flags[pkt] & FL_VAL2) == 0:
                    if sw == self.pk_mid[pkt]:
                        self.pk_flags[pkt] |= FL_VAL2
                    else:
                        target = self.pk_mid[pkt]
                vc = hop
            else:
                vc = hop // 2
            if vc >= self.V:
                return
            want: cython.int = self.dist[sw, target] - 1
            for p in range(self.PSW):
                b = self.nbr[sw, p]
                if b >= 0 and self.dist[b, target] == want:
                    self._cc_add(row, p, vc, 0, 0)
        elif algo == ALG_DOR:
            dim: cython.int
            base: cython.int = 0
            for dim in range(self.NDIMS):
                kk: cython.int = 0
                # ports of this dimension span [base, base + k - 1)
                while base + kk < self.PSW and self.port_dim[base + kk] == dim:
                    kk += 1
                if self.coords[sw, dim] != self.coords[dst, dim]:
                    for p in range(base, base + kk):
                        if self.port_val[sw, p] == self.coords[dst, dim]:
                            if self.nbr[sw, p] >= 0:
                                self._cc_add(row, p, 0, 0, 0)
                            return
                    return
                base += kk
        elif algo == ALG_OMNIWAR or algo == ALG_OMNI_SP:
            der: cython.int = self.pk_der[pkt]
            can_der: cython.int = 1 if der < self.omni_m else 0
            vmin: cython.int = hop - der
            vder: cython.int = self.NDIMS + der
            for p in range(self.PSW):
                b = self.nbr[sw, p]
                if b < 0:
                    continue
                dim2: cython.int = self.port_dim[p]
                if self.coords[sw, dim2] == self.coords[dst, dim2]:
                    continue
                if self.port_val[sw, p] == self.coords[dst, dim2]:
                    if algo == ALG_OMNI_SP:
                        self._cc_add(row, p, -1, 0, 0)
                    elif vmin < self.V:
                        self._cc_add(row, p, vmin, 0, 0)
                elif can_der:
                    if algo == ALG_OMNI_SP:
                        self._cc_add(row, p, -1, self.pen_deroute, CF_DEROUTE)
                    elif vder < self.V:
                        self._cc_add(row, p, vder, self.pen_deroute, CF_DEROUTE)
        else:  # polarized
            src: cython.int = self.pk_src_sw[pkt]
            ds_cur: cython.int = self.dist[sw, src]
            dt_cur: cython.int = self.dist[sw, dst]
            near_src: cython.int = 1 if ds_cur < dt_cur else 0
            best: cython.int = -1
            start: cython.int = self.cc_n[row]
            for p in range(self.PSW):
                b = self.nbr[sw, p]
                if b < 0:
                    continue
                ds: cython.int = self.dist[b, src] - ds_cur
                dt: cython.int = self.dist[b, dst] - dt_cur
                dmu: cython.int = ds - dt
                if dmu < 0:
                    continue
                if dmu == 0:
                    if ds == 0:  # revolving both endpoints is not a polarized hop
                        continue
                    if ds == 1 and near_src == 0:
                        continue
                    if ds == -1 and near_src == 1:
                        continue
                # penalty slot abused to carry dmu until rebased below
                self._cc_add(row, p, -1, dmu, 0)
                if dmu > best:
                    best = dmu
            j: cython.int
            off: cython.int
            vcp: cython.int = hop
            for j in range(start, self.cc_n[row]):
                off = best - self.cc_pen[row, j]
                if off > 2:
                    off = 2
                self.cc_pen[row, j] = self.pen_polar[off]
                if self.algo == ALG_POLARIZED:
                    self.cc_vc[row, j] = vcp
            if self.algo == ALG_POLARIZED and vcp >= self.V:
                self.cc_n[row] = start

    @cython.cfunc
    def _build_candidates(self, row: cython.int, sw: cython.int, pkt: cython.int):
        """Rebuild the candidate cache row for a head packet at switch sw."""
        self.cc_n[row] = 0
        self.cc_forced[row] = 0
        dst_sw: cython.int = self.pk_dst_sw[pkt]
        if dst_sw == sw:
            # ejection to the destination server's port, VC 0
            self._cc_add(row, self.PSW + self.pk_dst[pkt] % self.S, 0, 0, 0)
            return
        in_esc: cython.int = self.pk_flags[pkt] & FL_ESC
        routing_n: cython.int = 0
        if in_esc == 0:
            self._routing_candidates(row, sw, pkt)
            routing_n = self.cc_n[row]
            if self.surepath:
                # expand each routing candidate over all routing VCs
                n0: cython.int = routing_n
                j: cython.int
                vv: cython.int
                for j in range(n0):
                    self.cc_vc[row, j] = 0
                    for vv in range(1, self.rv):
                        self._cc_add(row, self.cc_port[row, j], vv,
                                     self.cc_pen[row, j], self.cc_flags[row, j])
        if self.surepath:
            forced: cython.int = 1 if (in_esc == 0 and routing_n == 0) else 0
            self.cc_forced[row] = forced
            ev: cython.int = self.V - 1
            cur_ud: cython.int = self.ud[sw, dst_sw]
            p: cython.int
            b: cython.int
            red: cython.int
            pen: cython.int
            for p in range(self.PSW):
                b = self.nbr[sw, p]
                if b < 0:
                    continue
                red = cur_ud - self.ud[b, dst_sw]
                if red < 1:
                    continue
                if self.level[b] < self.level[sw]:
                    pen = self.pen_up
                elif self.level[b] > self.level[sw]:
                    pen = self.pen_down
                else:
                    pen = self.pen_short[2 if red >= 3 else red - 1]
                self._cc_add(row, p, ev, pen, CF_ESC)
        if self.cc_n[row] == 0:
            self.unroutable += 1

    # ------------------------------------------- phase 2+3: route and alloc

    @cython.cfunc
    def _snapshot_scores(self):
        ou: cython.int = 0
        pp: cython.int
        v: cython.int
        acc: cython.int
        port: cython.int
        for pp in range(self.NPP):
            port = pp % self.P
            acc = 0
            for v in range(self.V):
                q: cython.int = self._q_of(ou + v, port)
                self.q_arr[ou + v] = q
                acc += q
            self.portq[pp] = acc
            ou += self.V

    @cython.cfunc
    def _admissible(self, ou: cython.int, pp: cython.int, port: cython.int) -> cython.int:
        if self.oq_len[ou] >= OUT_SLOTS:
            return 0
        if self.out_reserved[pp] + PKT_LEN > OUT_CAP:
            return 0
        if port < self.PSW and self.credit[ou] < PKT_LEN:
            return 0
        return 1

    @cython.cfunc
    def _route_and_request(self):
        self.req_ous_n = 0
        iu: cython.int
        sw: cython.int
        port: cython.int
        pkt: cython.int
        head: cython.int
        j: cython.int
        for iu in range(self.NIU):
            if self.in_len[iu] == 0 or self.granted[iu] != 0:
                continue
            head = self.in_head[iu]
            if self.in_ring_arr[iu, head] == 0:
                continue
            pkt = self.in_ring_pkt[iu, head]
            sw = iu // (self.P * self.V)
            if self.cc_n[iu] < 0:
                self._build_candidates(iu, sw, pkt)
            n: cython.int = self.cc_n[iu]
            if n == 0:
                continue
            swbase: cython.int = sw * self.P
            best: cython.int = INF32
            chosen: cython.int = -1
            ties: cython.int = 0
            # The request goes to the lowest-scored candidate regardless of
            # flow control; admission is enforced at grant time, so a packet
            # whose best output is busy waits for it instead of spilling onto
            # a worse path.
            for j in range(n):
                port = self.cc_port[iu, j]
                pp: cython.int = swbase + port
                ou: cython.int = pp * self.V + self.cc_vc[iu, j]
                s: cython.int = self.portq[pp] + self.q_arr[ou] + self.cc_pen[iu, j]
                if s < best:
                    best = s
                    chosen = j
                    ties = 1
                elif s == best:
                    ties += 1
                    if self._rand_below(ties) == 0:
                        chosen = j
            if chosen < 0:
                continue
            port = self.cc_port[iu, chosen]
            oub: cython.int = (swbase + port) * self.V + self.cc_vc[iu, chosen]
            self.req_ou[iu] = oub
            self.req_flag[iu] = self.cc_flags[iu, chosen] | (
                8 if self.cc_forced[iu] != 0 else 0
            )
            # reservoir pick of one winner per output unit
            if self.alloc_stamp[oub] != self.cycle:
                self.alloc_stamp[oub] = self.cycle
                self.alloc_cnt[oub] = 1
                self.alloc_win[oub] = iu
                self.alloc_wflag[oub] = self.req_flag[iu]
                self.req_ous[self.req_ous_n] = oub
                self.req_ous_n += 1
            else:
                self.alloc_cnt[oub] += 1
                if self._rand_below(self.alloc_cnt[oub]) == 0:
                    self.alloc_win[oub] = iu
                    self.alloc_wflag[oub] = self.req_flag[iu]

    @cython.cfunc
    def _grant(self):
        i: cython.int
        for i in range(self.req_ous_n):
            ou: cython.int = self.req_ous[i]
            pp: cython.int = ou // self.V
            port: cython.int = pp % self.P
            if self._admissible(ou, pp, port) == 0:
                continue
            iu: cython.int = self.alloc_win[ou]
            flag: cython.int = self.alloc_wflag[ou]
            head: cython.int = self.in_head[iu]
            pkt: cython.int = self.in_ring_pkt[iu, head]
            self.granted[iu] = 1
            self.gr_ou[iu] = ou
            self.gr_fwd[iu] = 0
            slot: cython.int = (self.oq_head[ou] + self.oq_len[ou]) % OUT_SLOTS
            self.gr_slot[iu] = slot
            self.oq_pkt[ou, slot] = pkt
            self.oq_phits[ou, slot] = 0
            self.oq_new[ou, slot] = 0
            self.oq_sent[ou, slot] = 0
            self.oq_len[ou] += 1
            self.out_reserved[pp] += PKT_LEN
            self.bind_list[pp, self.bind_len[pp]] = iu
            self.bind_len[pp] += 1
            if port < self.PSW:
                sw: cython.int = pp // self.P
                self.credit[ou] -= PKT_LEN
                self.pk_hop[pkt] += 1
                if flag & CF_DEROUTE:
                    self.pk_der[pkt] += 1
                    self.deroute_hops += 1
                if flag & CF_ESC:
                    self.pk_flags[pkt] |= FL_ESC
                    self.escape_hops += 1
                    if flag & 8:
                        self.forced_hops += 1
                else:
                    self.routing_hops += 1
                nsw: cython.int = self.nbr[sw, port]
                diu: cython.int = (nsw * self.P + self.nbr_port[sw, port]) * self.V + ou % self.V
                self._ring_push(diu, pkt)
                if self.debug:
                    if self._debug_hop(pkt, sw, nsw) != 0:
                        return

    @cython.cfunc
    def _debug_hop(self, pkt: cython.int, sw: cython.int, nsw: cython.int) -> cython.int:
        """Per-hop route invariants, enabled in debug mode."""
        algo: cython.int = self.algo
        if algo == ALG_POLARIZED or algo == ALG_POL_SP:
            if (self.pk_flags[pkt] & FL_ESC) == 0:
                mu: cython.int = (self.dist[nsw, self.pk_src_sw[pkt]]
                                  - self.dist[nsw, self.pk_dst_sw[pkt]])
                if mu < self.pk_mu[pkt]:
                    self.error_code = 10  # polarized weight decreased
                    return 1
                self.pk_mu[pkt] = mu
                if algo == ALG_POLARIZED and self.pk_hop[pkt] > self.diam2:
                    self.error_code = 11  # polarized length bound exceeded
                    return 1
        if algo == ALG_OMNIWAR or algo == ALG_OMNI_SP:
            if (self.pk_flags[pkt] & FL_ESC) == 0:
                if self.pk_der[pkt] > self.omni_m:
                    self.error_code = 12  # deroute budget exceeded
                    return 1
                if self.pk_hop[pkt] > self.NDIMS + self.omni_m:
                    self.error_code = 13  # omnidimensional length bound
                    return 1
        return 0

    # ------------------------------------------------- phase 4+5: movement

    @cython.cfunc
    def _crossbar(self):
        pp: cython.int
        cur: cython.int = self.pbuf
        for pp in range(self.NPP):
            nb: cython.int = self.bind_len[pp]
            if nb == 0:
                continue
            budget: cython.int = SPEEDUP
            start: cython.int = self.bind_rr[pp] % nb
            k: cython.int = 0
            while budget > 0 and k < nb:
                bi: cython.int = (start + k) % nb
                iu: cython.int = self.bind_list[pp, bi]
                head: cython.int = self.in_head[iu]
                avail: cython.int = self.in_ring_arr[iu, head] - self.gr_fwd[iu]
                if avail > budget:
                    avail = budget
                rem: cython.int = PKT_LEN - self.gr_fwd[iu]
                if avail > rem:
                    avail = rem
                if avail > 0:
                    ou: cython.int = self.gr_ou[iu]
                    slot: cython.int = self.gr_slot[iu]
                    if self.oq_new[ou, slot] == 0:
                        self.touched[self.touched_n] = ou * OUT_SLOTS + slot
                        self.touched_n += 1
                    self.oq_new[ou, slot] += avail
                    self.oq_phits[ou, slot] += avail
                    self.out_occ[ou] += avail
                    self.gr_fwd[iu] += avail
                    self.in_occ[iu] -= avail
                    budget -= avail
                    self.moved += avail
                    # credit return to the upstream hop, one cycle delayed
                    sw: cython.int = iu // (self.P * self.V)
                    port: cython.int = (iu // self.V) % self.P
                    n2: cython.int = self.pc_n[cur]
                    if port < self.PSW:
                        usw: cython.int = self.nbr[sw, port]
                        uou: cython.int = (usw * self.P + self.nbr_port[sw, port]) * self.V + iu % self.V
                        self.pc_idx[cur, n2] = uou
                    else:
                        self.pc_idx[cur, n2] = self.NOU + sw * self.S + (port - self.PSW)
                    self.pc_cnt[cur, n2] = avail
                    self.pc_n[cur] = n2 + 1
                    if self.gr_fwd[iu] == PKT_LEN:
                        # fully forwarded: pop the input entry and unbind
                        self.granted[iu] = 0
                        self.in_head[iu] = (head + 1) % IN_SLOTS
                        self.in_len[iu] -= 1
                        self.cc_n[iu] = -1
                        self.bind_len[pp] = nb - 1
                        self.bind_list[pp, bi] = self.bind_list[pp, nb - 1]
                        nb -= 1
                        continue
                k += 1
            if nb > 0:
                self.bind_rr[pp] = (start + 1) % nb

    @cython.cfunc
    def _link(self):
        pp: cython.int
        cur: cython.int = self.pbuf
        for pp in range(self.NPP):
            port: cython.int = pp % self.P
            sw: cython.int = pp // self.P
            base: cython.int = pp * self.V
            v0: cython.int = self.link_rr[pp]
            i: cython.int
            for i in range(self.V):
                vc: cython.int = (v0 + i) % self.V
                ou: cython.int = base + vc
                if self.oq_len[ou] == 0:
                    continue
                head: cython.int = self.oq_head[ou]
                ready: cython.int = self.oq_phits[ou, head] - self.oq_new[ou, head]
                if ready <= 0:
                    continue
                self.oq_phits[ou, head] -= 1
                self.out_occ[ou] -= 1
                self.out_reserved[pp] -= 1
                self.oq_sent[ou, head] += 1
                self.moved += 1
                pkt: cython.int = self.oq_pkt[ou, head]
                if port < self.PSW:
                    nsw: cython.int = self.nbr[sw, port]
                    diu: cython.int = (nsw * self.P + self.nbr_port[sw, port]) * self.V + vc
                    n2: cython.int = self.pa_n[cur]
                    self.pa_iu[cur, n2] = diu
                    self.pa_n[cur] = n2 + 1
                else:
                    srv: cython.int = sw * self.S + (port - self.PSW)
                    if self.meas_start <= self.cycle < self.meas_end:
                        self.srv_consumed[srv] += 1
                        self.consumed_meas += 1
                if self.oq_sent[ou, head] == PKT_LEN:
                    self.oq_head[ou] = (head + 1) % OUT_SLOTS
                    self.oq_len[ou] -= 1
                    if port >= self.PSW:
                        # tail ejected: the packet is delivered
                        if self.meas_start <= self.cycle < self.meas_end:
                            self.lat_sum += self.cycle - self.pk_create[pkt] + 1
                            self.lat_n += 1
                            self.hop_sum += self.pk_hop[pkt]
                        self._free_pkt(pkt)
                        self.in_flight -= 1
                        self.delivered += 1
                self.link_rr[pp] = (vc + 1) % self.V
                break

    # ---------------------------------------------------------- invariants

    @cython.cfunc
    def _check_invariants(self) -> cython.int:
        """Exact credit conservation and occupancy bounds (debug mode)."""
        iu: cython.int
        ou: cython.int
        pp: cython.int
        # committed[ou]: phits granted through ou and not yet credited back
        committed = np.zeros(self.NOU, dtype=np.int64)
        com: cython.long[:] = committed
        for iu in range(self.NIU):
            if self.in_occ[iu] > IN_CAP:
                self.error_code = 20
                return 1
            if self.granted[iu] != 0:
                com[self.gr_ou[iu]] += PKT_LEN - self.gr_fwd[iu]
        j: cython.int
        for ou in range(self.NOU):
            for j in range(self.oq_len[ou]):
                com[ou] += self.oq_phits[ou, (self.oq_head[ou] + j) % OUT_SLOTS]
        # phits on the wire and credits in return transit
        b: cython.int
        i: cython.int
        srv_com = np.zeros(self.NSRV, dtype=np.int64)
        scom: cython.long[:] = srv_com
        sw: cython.int
        port: cython.int
        for b in range(2):
            for i in range(self.pa_n[b]):
                iu = self.pa_iu[b, i]
                sw = iu // (self.P * self.V)
                port = (iu // self.V) % self.P
                if port < self.PSW:
                    com[(self.nbr[sw, port] * self.P + self.nbr_port[sw, port]) * self.V + iu % self.V] += 1
                else:
                    scom[sw * self.S + port - self.PSW] += 1
            for i in range(self.pc_n[b]):
                if self.pc_idx[b, i] >= self.NOU:
                    scom[self.pc_idx[b, i] - self.NOU] += self.pc_cnt[b, i]
                else:
                    com[self.pc_idx[b, i]] += self.pc_cnt[b, i]
        for iu in range(self.NIU):
            sw = iu // (self.P * self.V)
            port = (iu // self.V) % self.P
            if port < self.PSW:
                com[(self.nbr[sw, port] * self.P + self.nbr_port[sw, port]) * self.V + iu % self.V] += self.in_occ[iu]
            else:
                pass
        s: cython.int
        for s in range(self.NSRV):
            iu = ((s // self.S) * self.P + self.PSW + s % self.S) * self.V
            scom[s] += self.in_occ[iu]
            if self.srv_active[s] >= 0:
                scom[s] += PKT_LEN - self.srv_sent[s]
        for pp in range(self.NPP):
            port = pp % self.P
            if self.out_reserved[pp] > OUT_CAP:
                self.error_code = 21
                return 1
            if port < self.PSW:
                sw = pp // self.P
                if self.nbr[sw, port] < 0:
                    continue
                for ou in range(pp * self.V, pp * self.V + self.V):
                    if self.credit[ou] + com[ou] != IN_CAP:
                        self.error_code = 22
                        return 1
        for s in range(self.NSRV):
            if self.srv_credit[s] + scom[s] != IN_CAP:
                self.error_code = 23
                return 1
        # packet conservation
        if self.injected != self.delivered + self.in_flight:
            self.error_code = 24
            return 1
        return 0

    # -------------------------------------------------------------- driver

    @cython.ccall
    def step(self, generate: cython.int) -> cython.int:
        """One full cycle; returns nonzero error code on invariant failure."""
        self.moved = 0
        self._apply_pending()
        self.pbuf = 1 - self.pbuf
        self._inject(generate)
        self._snapshot_scores()
        self._route_and_request()
        self._grant()
        if self.error_code:
            return self.error_code
        self._crossbar()
        self._link()
        if self.debug:
            if self._check_invariants() != 0:
                return self.error_code
        if self.in_flight > 0 and self.moved == 0:
            self.idle_cycles += 1
            if self.idle_cycles >= self.deadlock_limit:
                self.deadlocked = 1
                self.error_code = 30
                return 30
        else:
            self.idle_cycles = 0
        self.cycle += 1
        return 0

    @cython.ccall
    def run_rate(self, warmup: cython.long, measure: cython.long) -> cython.int:
        """Warmup then measurement window under Bernoulli generation."""
        self.meas_start = warmup
        self.meas_end = warmup + measure
        rc: cython.int
        t: cython.long
        for t in range(warmup + measure):
            rc = self.step(1)
            if rc != 0:
                return rc
        return 0

    @cython.ccall
    def run_completion(self, packets_per_server: cython.int, drain_limit: cython.long,
                       bucket: cython.long):
        """Finite workload: queue everything at cycle 0, run until drained.

        Returns (error_code, completion_cycle, series) where series lists
        the phits consumed in each `bucket`-cycle window.  Measurement
        covers the whole run.
        """
        self.meas_start = 0
        self.meas_end = 2**62
        s: cython.int
        j: cython.int
        for s in range(self.NSRV):
            for j in range(packets_per_server):
                self._queue_packet(s, 0)
        pending: cython.long = cython.cast(cython.long, packets_per_server) * self.NSRV
        rc: cython.int = 0
        series = []
        last: cython.long = 0
        while self.delivered < pending and self.cycle < drain_limit:
            rc = self.step(0)
            if rc != 0:
                break
            if bucket > 0 and self.cycle % bucket == 0:
                series.append(int(self.consumed_meas - last))
                last = self.consumed_meas
        if self.consumed_meas > last:
            series.append(int(self.consumed_meas - last))
        if rc == 0 and self.delivered < pending:
            rc = 31  # drain limit exceeded
        return rc, int(self.cycle), series

    @cython.ccall
    def drain(self, limit: cython.long) -> cython.int:
        """Stop generating and run until the network is empty."""
        rc: cython.int = 0
        t: cython.long = 0
        while (self.in_flight > 0 or self._queued() > 0) and t < limit:
            rc = self.step(0)
            if rc != 0:
                return rc
            t += 1
        return 0 if self.in_flight == 0 and self._queued() == 0 else 32

    @cython.cfunc
    def _queued(self) -> cython.long:
        s: cython.int
        total: cython.long = 0
        for s in range(self.NSRV):
            total += self.srv_qlen[s]
        return total

    # ------------------------------------------------------------- results

    def stats(self) -> dict:
        return {
            "cycle": int(self.cycle),
            "injected": int(self.injected),
            "delivered": int(self.delivered),
            "in_flight": int(self.in_flight),
            "consumed_meas": int(self.consumed_meas),
            "lat_sum": int(self.lat_sum),
            "lat_n": int(self.lat_n),
            "forced_hops": int(self.forced_hops),
            "escape_hops": int(self.escape_hops),
            "routing_hops": int(self.routing_hops),
            "deroute_hops": int(self.deroute_hops),
            "hop_sum": int(self.hop_sum),
            "unroutable": int(self.unroutable),
            "deadlocked": bool(self.deadlocked),
            "error_code": int(self.error_code),
            "srv_gen": np.asarray(self.srv_gen).copy(),
            "srv_consumed": np.asarray(self.srv_consumed).copy(),
        }

    def probe_candidates(self, sw, src_sw, dst_srv, hop, der, mid, flags):
        """Test hook: candidate list for a synthetic packet head at sw.

        Returns a list of (port, vc, penalty, flags) plus the forced flag,
        computed by the production candidate builder in a scratch row.
        """
        pkt = self._alloc_pkt()
        self.pk_src[pkt] = src_sw * self.S
        self.pk_src_sw[pkt] = src_sw
        self.pk_dst[pkt] = dst_srv
        self.pk_dst_sw[pkt] = dst_srv // self.S
        self.pk_hop[pkt] = hop
        self.pk_der[pkt] = der
        self.pk_mid[pkt] = mid
        self.pk_flags[pkt] = flags
        row = self.NIU
        self.cc_n[row] = -1
        self._build_candidates(row, sw, pkt)
        out = [
            (
                int(self.cc_port[row, j]),
                int(self.cc_vc[row, j]),
                int(self.cc_pen[row, j]),
                int(self.cc_flags[row, j]),
            )
            for j in range(self.cc_n[row])
        ]
        forced = bool(self.cc_forced[row])
        self._free_pkt(pkt)
        return out, forced

    def measurement_window(self, start, end):
        """Test hook: override the measurement window before stepping."""
        self.meas_start = start
        self.meas_end = end
