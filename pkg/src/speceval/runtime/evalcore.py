"""Interpreter kernel: statement/expression evaluation, spec evaluation,
coverage counters, and the step-limit guard.

This module is deliberately plain Python: setup.py compiles this same file
into the optional `speceval.runtime._evalcore` extension, so the compiled
and fallback paths cannot diverge. Keep it free of syntax Cython does not
support.
"""

from __future__ import annotations

from ..lang import ast as A

INT_MIN = -(2**31)
INT_MAX = 2**31 - 1
_WRAP_BIAS = 2**31
_WRAP_MOD = 2**32

MAX_CALL_DEPTH = 200


class Fault(Exception):
    """Internal abnormal stop; surfaced as (kind, line) in RunOutcome."""

    def __init__(self, kind, line):
        Exception.__init__(self, kind)
        self.kind = kind
        self.line = line


class _Return(Exception):
    def __init__(self, value):
        Exception.__init__(self)
        self.value = value


def wrap32(v):
    return ((v + _WRAP_BIAS) % _WRAP_MOD) - _WRAP_BIAS


def jdiv(a, b, line):
    if b == 0:
        raise Fault("DivisionByZero", line)
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return wrap32(q)


def jrem(a, b, line):
    if b == 0:
        raise Fault("DivisionByZero", line)
    r = abs(a) % abs(b)
    if a < 0:
        r = -r
    return r


def copy_value(v):
    if isinstance(v, list):
        return list(v)
    return v


def values_equal(a, b):
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, list) and isinstance(b, list):
        return a == b
    if type(a) is not type(b):
        return False
    return a == b


class Prepared:
    """A unit pre-indexed for execution: spec clauses grouped per anchor,
    coverable lines and branch sites enumerated, site ids assigned."""

    def __init__(self, unit):
        self.unit = unit
        self.methods = {}
        self.requires = {}
        self.ensures = {}
        self.invariants = {}
        self.coverable_lines = set()
        self.branch_sites = []
        for m in unit.methods:
            self.methods[m.name] = m
            self.requires[m.name] = []
            self.ensures[m.name] = []
        for c in unit.specs:
            if c.kind == "requires":
                self.requires[c.anchor].append(c)
            elif c.kind == "ensures":
                self.ensures[c.anchor].append(c)
            else:
                self.invariants.setdefault(c.anchor, []).append(c)
        site = 0
        for m in unit.methods:
            for st in A.walk_stmts(m.body):
                self.coverable_lines.add(st.line)
                if isinstance(st, A.If):
                    site += 1
                    st.site = site
                    self.branch_sites.append(site)
                elif isinstance(st, A.While):
                    site += 1
                    st.site = site
                    self.branch_sites.append(site)
                elif isinstance(st, A.For):
                    site += 1
                    st.site = site
                    if st.cond is not None:
                        self.branch_sites.append(site)

    def has_specs_for(self, mname):
        return bool(self.requires.get(mname)) or bool(self.ensures.get(mname))


class SpecProbe:
    """Aggregated spec-check outcomes for one batch of runs."""

    def __init__(self):
        self.evals = {}
        self.skips = {}
        self.failures = {}  # cid -> (site, state dict)

    def record(self, cid, ok, site, state):
        self.evals[cid] = self.evals.get(cid, 0) + 1
        if not ok and cid not in self.failures:
            self.failures[cid] = (site, state)

    def record_skip(self, cid):
        self.skips[cid] = self.skips.get(cid, 0) + 1


class RunOutcome:
    def __init__(self, value, fault_kind, fault_line, line_hits, branch_hits):
        self.value = value
        self.fault_kind = fault_kind
        self.fault_line = fault_line
        self.line_hits = line_hits
        self.branch_hits = branch_hits

    def key(self):
        """Observable behavior: result value or fault kind."""
        if self.fault_kind is not None:
            return ("fault", self.fault_kind)
        return ("value", self.value)


class Interp:
    def __init__(self, prepared, step_limit, probe=None, collect_method=None):
        self.prepared = prepared
        self.limit = step_limit
        self.steps = 0
        self.depth = 0
        self.probe = probe
        self.line_hits = {}
        self.branch_hits = {}
        self.in_spec = 0
        self.collect_method = collect_method
        self.collected = []

    # ------------------------------------------------------------ budget

    def tick(self, line):
        self.steps += 1
        if self.steps > self.limit:
            raise Fault("StepLimitExceeded", line)

    # ----------------------------------------------------------- methods

    def call(self, mname, args, checked):
        m = self.prepared.methods.get(mname)
        if m is None:
            raise Fault("UnknownMethod", 0)
        self.depth += 1
        if self.depth > MAX_CALL_DEPTH:
            self.depth -= 1
            raise Fault("StepLimitExceeded", m.line)
        env = {}
        i = 0
        for p in m.params:
            env[p[0]] = args[i]
            i += 1
        do_check = checked and self.probe is not None and self.in_spec == 0
        collecting = self.collect_method == mname and self.in_spec == 0
        req = self.prepared.requires.get(mname) or ()
        ens = self.prepared.ensures.get(mname) or ()
        old_env = None
        obligations = True
        if (do_check and (req or ens)) or collecting:
            old_env = {}
            for k in env:
                old_env[k] = copy_value(env[k])
        if do_check and (req or ens):
            for clause in req:
                ok = self.check_clause(clause, "requires@entry", env, None, None)
                if not ok:
                    obligations = False
            if not obligations:
                for clause in ens:
                    self.probe.record_skip(clause.cid)
        try:
            try:
                self.exec_block(m.body, env, checked)
                value = None
            except _Return as r:
                value = r.value
        finally:
            self.depth -= 1
        if collecting:
            self.collected.append(
                {
                    "env": dict((k, copy_value(v)) for k, v in env.items()),
                    "old": dict((k, copy_value(v)) for k, v in old_env.items()),
                    "result": copy_value(value),
                }
            )
        if do_check and ens and obligations:
            for clause in ens:
                self.check_clause(clause, "ensures@return", env, old_env, value)
        return value

    def check_clause(self, clause, site, env, old_env, result):
        """Evaluate one clause; False and faults both count against it.

        Spec evaluation runs on its own step budget so a runaway clause
        (e.g. a huge quantifier range) faults itself, not the program run.
        """
        self.in_spec += 1
        saved_steps = self.steps
        saved_limit = self.limit
        self.limit = self.steps + saved_limit
        try:
            ok = self.eval(clause.expr, env, old_env, result)
            fault = None
        except Fault as f:
            ok = False
            fault = f.kind
        finally:
            self.in_spec -= 1
            self.steps = saved_steps
            self.limit = saved_limit
        if self.probe is not None:
            if ok:
                self.probe.record(clause.cid, True, site, None)
            else:
                state = {
                    "env": dict((k, copy_value(v)) for k, v in env.items()),
                    "old": None
                    if old_env is None
                    else dict((k, copy_value(v)) for k, v in old_env.items()),
                    "result": copy_value(result),
                    "fault": fault,
                }
                self.probe.record(clause.cid, False, site, state)
        return ok

    # -------------------------------------------------------- statements

    def exec_block(self, body, env, checked):
        for st in body:
            self.exec_stmt(st, env, checked)

    def exec_stmt(self, st, env, checked):
        self.tick(st.line)
        if self.in_spec == 0:
            line = st.line
            self.line_hits[line] = self.line_hits.get(line, 0) + 1
        if isinstance(st, A.VarDecl):
            env[st.name] = self.eval(st.init, env, None, None)
        elif isinstance(st, A.Assign):
            value = self.eval(st.value, env, None, None)
            tgt = st.target
            if isinstance(tgt, A.VarRef):
                env[tgt.name] = value
            else:
                arr = self.eval(tgt.base, env, None, None)
                idx = self.eval(tgt.index, env, None, None)
                if idx < 0 or idx >= len(arr):
                    raise Fault("IndexOutOfBounds", st.line)
                arr[idx] = value
        elif isinstance(st, A.If):
            c = self.eval(st.cond, env, None, None)
            self.hit_branch(st.site, c)
            if c:
                self.exec_block(st.then_body, env, checked)
            elif st.else_body is not None:
                self.exec_block(st.else_body, env, checked)
        elif isinstance(st, A.While):
            inv = self.prepared.invariants.get(st.loop_id) or ()
            do_check = checked and self.probe is not None and self.in_spec == 0
            while True:
                if do_check:
                    for clause in inv:
                        self.check_clause(clause, "loop@head", env, None, None)
                c = self.eval(st.cond, env, None, None)
                self.hit_branch(st.site, c)
                if not c:
                    break
                self.exec_block(st.body, env, checked)
        elif isinstance(st, A.For):
            inv = self.prepared.invariants.get(st.loop_id) or ()
            do_check = checked and self.probe is not None and self.in_spec == 0
            if st.init is not None:
                self.exec_stmt(st.init, env, checked)
            while True:
                if do_check:
                    for clause in inv:
                        self.check_clause(clause, "loop@head", env, None, None)
                if st.cond is not None:
                    c = self.eval(st.cond, env, None, None)
                    self.hit_branch(st.site, c)
                    if not c:
                        break
                self.exec_block(st.body, env, checked)
                if st.update is not None:
                    self.exec_stmt(st.update, env, checked)
        elif isinstance(st, A.Return):
            if st.value is None:
                raise _Return(None)
            raise _Return(self.eval(st.value, env, None, None))
        elif isinstance(st, A.Block):
            self.exec_block(st.body, env, checked)
        else:
            raise Fault("UnknownStatement", st.line)

    def hit_branch(self, site, taken):
        if self.in_spec:
            return
        rec = self.branch_hits.get(site)
        if rec is None:
            rec = [0, 0]
            self.branch_hits[site] = rec
        if taken:
            rec[0] += 1
        else:
            rec[1] += 1

    # -------------------------------------------------------- expressions

    def eval(self, e, env, old_env, result):
        self.tick(e.line)
        if isinstance(e, A.IntLit):
            return e.value
        if isinstance(e, A.VarRef):
            try:
                return env[e.name]
            except KeyError:
                raise Fault("UnknownVariable", e.line)
        if isinstance(e, A.Binary):
            op = e.op
            if op == "&&":
                if not self.eval(e.left, env, old_env, result):
                    return False
                return bool(self.eval(e.right, env, old_env, result))
            if op == "||":
                if self.eval(e.left, env, old_env, result):
                    return True
                return bool(self.eval(e.right, env, old_env, result))
            l = self.eval(e.left, env, old_env, result)
            r = self.eval(e.right, env, old_env, result)
            if op == "+":
                return wrap32(l + r)
            if op == "-":
                return wrap32(l - r)
            if op == "*":
                return wrap32(l * r)
            if op == "/":
                return jdiv(l, r, e.line)
            if op == "%":
                return jrem(l, r, e.line)
            if op == "<":
                return l < r
            if op == "<=":
                return l <= r
            if op == ">":
                return l > r
            if op == ">=":
                return l >= r
            if op == "==":
                return values_equal(l, r)
            if op == "!=":
                return not values_equal(l, r)
            raise Fault("UnknownOperator", e.line)
        if isinstance(e, A.BoolLit):
            return e.value
        if isinstance(e, A.StringLit):
            return e.value
        if isinstance(e, A.ArrayIndex):
            arr = self.eval(e.base, env, old_env, result)
            idx = self.eval(e.index, env, old_env, result)
            if idx < 0 or idx >= len(arr):
                raise Fault("IndexOutOfBounds", e.line)
            return arr[idx]
        if isinstance(e, A.FieldLen):
            return len(self.eval(e.base, env, old_env, result))
        if isinstance(e, A.CharAt):
            s = self.eval(e.base, env, old_env, result)
            idx = self.eval(e.index, env, old_env, result)
            if idx < 0 or idx >= len(s):
                raise Fault("IndexOutOfBounds", e.line)
            return ord(s[idx])
        if isinstance(e, A.Unary):
            v = self.eval(e.operand, env, old_env, result)
            if e.op == "!":
                return not v
            return wrap32(-v)
        if isinstance(e, A.Call):
            args = []
            for a in e.args:
                args.append(self.eval(a, env, old_env, result))
            if self.in_spec:
                # spec evaluation must not mutate program state
                args = [copy_value(a) for a in args]
            return self.call(e.method, args, False)
        if isinstance(e, A.Result):
            return result
        if isinstance(e, A.Old):
            if old_env is None:
                raise Fault("OldOutsideEnsures", e.line)
            return self.eval(e.inner, old_env, old_env, result)
        if isinstance(e, A.Implies):
            if not self.eval(e.left, env, old_env, result):
                return True
            return bool(self.eval(e.right, env, old_env, result))
        if isinstance(e, A.Iff):
            l = self.eval(e.left, env, old_env, result)
            r = self.eval(e.right, env, old_env, result)
            return bool(l) == bool(r)
        if isinstance(e, A.Quant):
            return self.eval_quant(e, env, old_env, result)
        raise Fault("UnknownExpression", e.line)

    def eval_quant(self, q, env, old_env, result):
        bounds = q.bounds
        if bounds is None:
            from ..lang.analysis import extract_interval

            bounds = extract_interval(q.range_, q.binder)
        lo = None
        hi = None
        for side, expr, inclusive in bounds:
            v = self.eval(expr, env, old_env, result)
            if side == "lo":
                b = v if inclusive else v + 1
                if lo is None or b > lo:
                    lo = b
            else:
                b = v + 1 if inclusive else v
                if hi is None or b < hi:
                    hi = b
        if lo is None or hi is None:
            raise Fault("UnboundedQuantifier", q.line)
        forall = q.kind == "forall"
        had = q.binder in env
        saved = env.get(q.binder)
        try:
            i = lo
            while i < hi:
                self.tick(q.line)
                env[q.binder] = i
                v = self.eval(q.body, env, old_env, result)
                if forall:
                    if not v:
                        return False
                else:
                    if v:
                        return True
                i += 1
        finally:
            if had:
                env[q.binder] = saved
            elif q.binder in env:
                del env[q.binder]
        return forall


def run_test(prepared, method, args, step_limit, probe=None):
    """Execute one invocation; returns RunOutcome (faults captured, not raised)."""
    interp = Interp(prepared, step_limit, probe)
    call_args = [copy_value(a) for a in args]
    try:
        value = interp.call(method, call_args, True)
        return RunOutcome(value, None, 0, interp.line_hits, interp.branch_hits)
    except Fault as f:
        return RunOutcome(None, f.kind, f.line, interp.line_hits, interp.branch_hits)


def collect_return_states(prepared, method, tests, step_limit):
    """Entry/return state snapshots of every completed invocation of
    `method` across the suite (test arguments and inner calls alike)."""
    states = []
    for t in tests:
        interp = Interp(prepared, step_limit, None, collect_method=method)
        call_args = [copy_value(a) for a in t.args]
        try:
            interp.call(t.method, call_args, False)
        except Fault:
            pass
        states.extend(interp.collected)
    return states


def eval_clause_in_state(prepared, clause, state, step_limit):
    """Replay a clause against a captured snapshot; used to confirm
    counterexamples. Returns (ok, fault_kind)."""
    interp = Interp(prepared, step_limit, None)
    interp.in_spec = 1
    try:
        ok = interp.eval(clause.expr, state["env"], state["old"], state["result"])
        return bool(ok), None
    except Fault as f:
        return False, f.kind


def eval_spec_standalone(prepared, expr, env, old_env, result, step_limit):
    """Evaluate one spec expression against explicit state (test helper)."""
    interp = Interp(prepared, step_limit, None)
    interp.in_spec = 1
    return interp.eval(expr, env, old_env, result)
