#!/usr/bin/env python3
"""Regenerate the bundled sample corpus: programs, augmented test suites,
and manifest. Deterministic for a fixed AUGMENT_SEED."""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from speceval.corpus import augment_tests, validate_entry, write_manifest  # noqa: E402
from speceval.lang import parse_unit, print_unit  # noqa: E402
from speceval.runtime import TestCase, execute, prepare  # noqa: E402

AUGMENT_SEED = 20240917
TARGET_SUITE = 15

# (entry id, source, seed tests as (method, args))
PROGRAMS: list[tuple[str, str, list[tuple[str, list]]]] = [
    # ------------------------------------------------------------ sequential
    (
        "swap_diff",
        """
class SwapDiff {
    //@ requires true;
    //@ ensures \\result == \\old(num2) - \\old(num1);
    static int swapDiff(int num1, int num2) {
        int temp = num1;
        num1 = num2;
        num2 = temp;
        return num1 - num2;
    }
}
""",
        [("swapDiff", [3, 10]), ("swapDiff", [-7, 7]), ("swapDiff", [0, 0]), ("swapDiff", [100, -100])],
    ),
    (
        "add_mul",
        """
class AddMul {
    //@ requires true;
    //@ ensures \\result == a + b + a * b;
    static int addMul(int a, int b) {
        int s = a + b;
        int p = a * b;
        return s + p;
    }
}
""",
        [("addMul", [2, 3]), ("addMul", [0, 5]), ("addMul", [-4, 4]), ("addMul", [-1, -1])],
    ),
    (
        "average_floor",
        """
class AverageFloor {
    //@ requires true;
    //@ ensures \\result == (a + b) / 2;
    static int averageFloor(int a, int b) {
        int sum = a + b;
        return sum / 2;
    }
}
""",
        [("averageFloor", [4, 8]), ("averageFloor", [3, 4]), ("averageFloor", [-3, -4]), ("averageFloor", [-1, 2])],
    ),
    (
        "cube_shift",
        """
class CubeShift {
    //@ requires true;
    //@ ensures \\result == x * x * x;
    static int cubeShift(int x) {
        int sq = x * x;
        int cu = sq * x;
        return cu;
    }
}
""",
        [("cubeShift", [3]), ("cubeShift", [-2]), ("cubeShift", [0]), ("cubeShift", [11])],
    ),
    (
        "sum_squares",
        """
class SumSquares {
    //@ requires true;
    //@ ensures \\result == x * x;
    static int square(int x) {
        return x * x;
    }

    //@ requires true;
    //@ ensures \\result == a * a + b * b;
    static int sumSquares(int a, int b) {
        int p = square(a);
        int q = square(b);
        return p + q;
    }
}
""",
        [("sumSquares", [3, 4]), ("sumSquares", [-5, 2]), ("square", [7]), ("square", [-9]), ("sumSquares", [0, 0])],
    ),
    # ------------------------------------------------------------ branch-only
    (
        "fizzbuzz_code",
        """
class FizzBuzzCode {
    //@ requires n > 0;
    //@ ensures \\result == 15 <==> n % 15 == 0;
    //@ ensures \\result == 3 <==> n % 3 == 0 && n % 5 != 0;
    //@ ensures \\result == 5 <==> n % 5 == 0 && n % 3 != 0;
    //@ ensures (n % 3 != 0 && n % 5 != 0) ==> \\result == n;
    static int fizzBuzz(int n) {
        int three = n % 3;
        int five = n % 5;
        if (three == 0 && five == 0) {
            return 15;
        } else if (three == 0) {
            return 3;
        } else if (five == 0) {
            return 5;
        } else {
            return n;
        }
    }
}
""",
        [("fizzBuzz", [15]), ("fizzBuzz", [3]), ("fizzBuzz", [5]), ("fizzBuzz", [7]), ("fizzBuzz", [30]), ("fizzBuzz", [9]), ("fizzBuzz", [10]), ("fizzBuzz", [1])],
    ),
    (
        "max_of_two",
        """
class MaxOfTwo {
    //@ requires true;
    //@ ensures \\result >= a && \\result >= b;
    //@ ensures \\result == a || \\result == b;
    static int max2(int a, int b) {
        int best = a;
        int other = b;
        if (best < other) {
            return other;
        } else {
            return best;
        }
    }
}
""",
        [("max2", [1, 2]), ("max2", [9, -9]), ("max2", [4, 4])],
    ),
    (
        "abs_val",
        """
class AbsVal {
    //@ requires x > Integer.MIN_VALUE;
    //@ ensures \\result >= 0;
    //@ ensures \\result == x || \\result == 0 - x;
    static int absVal(int x) {
        int y = x;
        if (y < 0) {
            return 0 - y;
        } else {
            return y;
        }
    }
}
""",
        [("absVal", [5]), ("absVal", [-5]), ("absVal", [0])],
    ),
    (
        "sign_of",
        """
class SignOf {
    //@ requires true;
    //@ ensures v < 0 ==> \\result == 0 - 1;
    //@ ensures v == 0 <==> \\result == 0;
    //@ ensures v > 0 ==> \\result == 1;
    static int signOf(int v) {
        int neg = 0 - 1;
        int pos = 1;
        if (v < 0) {
            return neg;
        } else if (v == 0) {
            return 0;
        } else {
            return pos;
        }
    }
}
""",
        [("signOf", [12]), ("signOf", [-12]), ("signOf", [0])],
    ),
    (
        "clamp_range",
        """
class ClampRange {
    //@ requires lo <= hi;
    //@ ensures lo <= \\result && \\result <= hi;
    //@ ensures (lo <= v && v <= hi) ==> \\result == v;
    static int clamp(int v, int lo, int hi) {
        if (v < lo) {
            return lo;
        } else if (v > hi) {
            return hi;
        } else {
            return v;
        }
    }
}
""",
        [("clamp", [5, 0, 10]), ("clamp", [-5, 0, 10]), ("clamp", [15, 0, 10]), ("clamp", [0, 0, 0])],
    ),
    (
        "max_of_three",
        """
class MaxOfThree {
    //@ requires true;
    //@ ensures \\result >= a && \\result >= b && \\result >= c;
    //@ ensures \\result == a || \\result == b || \\result == c;
    static int max3(int a, int b, int c) {
        if (a >= b && a >= c) {
            return a;
        } else if (b >= a && b >= c) {
            return b;
        } else {
            return c;
        }
    }
}
""",
        [("max3", [1, 2, 3]), ("max3", [3, 2, 1]), ("max3", [2, 3, 1]), ("max3", [5, 5, 5])],
    ),
    (
        "is_even_check",
        """
class IsEvenCheck {
    //@ requires n >= 0;
    //@ ensures \\result <==> n % 2 == 0;
    static boolean isEven(int n) {
        int r = n % 2;
        if (r == 0) {
            return true;
        } else {
            return false;
        }
    }
}
""",
        [("isEven", [0]), ("isEven", [7]), ("isEven", [8])],
    ),
    (
        "grade_band",
        """
class GradeBand {
    //@ requires score >= 0 && score <= 100;
    //@ ensures score >= 90 ==> \\result == 4;
    //@ ensures (score >= 60 && score < 90) ==> \\result == 2;
    //@ ensures score < 60 ==> \\result == 0;
    static int gradeBand(int score) {
        int top = 90;
        int mid = 60;
        if (score >= top) {
            return 4;
        } else if (score >= mid) {
            return 2;
        } else {
            return 0;
        }
    }
}
""",
        [("gradeBand", [95]), ("gradeBand", [75]), ("gradeBand", [30]), ("gradeBand", [90]), ("gradeBand", [60])],
    ),
    # ------------------------------------------------------------ single-loop
    (
        "palindrome_check",
        """
class PalindromeCheck {
    //@ requires s.length() >= 0;
    //@ ensures \\result <==> (\\forall int k; 0 <= k && k < s.length(); s.charAt(k) == s.charAt(s.length() - 1 - k));
    static boolean isPalindrome(String s) {
        int i = 0;
        int j = s.length() - 1;
        //@ loop_invariant 0 <= i;
        //@ loop_invariant i + j == s.length() - 1;
        //@ loop_invariant (\\forall int k; 0 <= k && k < i; s.charAt(k) == s.charAt(s.length() - 1 - k));
        while (i < j) {
            if (s.charAt(i) != s.charAt(j)) {
                return false;
            } else {
                i = i + 1;
                j = j - 1;
            }
        }
        return true;
    }
}
""",
        [("isPalindrome", ["aba"]), ("isPalindrome", [""]), ("isPalindrome", ["ab"]), ("isPalindrome", ["abba"]), ("isPalindrome", ["abca"]), ("isPalindrome", ["x"]), ("isPalindrome", ["racecar"])],
    ),
    (
        "int_square",
        """
class IntSquare {
    //@ requires n >= 0 && n <= 1000;
    //@ ensures \\result == n * n;
    static int intSquare(int n) {
        int result = 0;
        int odd = 1;
        int i = 0;
        //@ loop_invariant 0 <= i && i <= n;
        //@ loop_invariant odd == 2 * i + 1;
        //@ loop_invariant result == i * i;
        while (i < n) {
            result = result + odd;
            odd = odd + 2;
            i = i + 1;
        }
        return result;
    }
}
""",
        [("intSquare", [0]), ("intSquare", [1]), ("intSquare", [5]), ("intSquare", [31])],
    ),
    (
        "count_down",
        """
class CountDown {
    //@ requires n >= 0;
    //@ ensures \\result == 0;
    static int countDown(int n) {
        int k = n;
        //@ loop_invariant 0 <= k;
        //@ loop_invariant k <= n;
        while (k > 0) {
            k = k - 1;
        }
        return k;
    }
}
""",
        [("countDown", [0]), ("countDown", [1]), ("countDown", [17])],
    ),
    (
        "array_max",
        """
class ArrayMax {
    //@ requires a.length >= 1;
    //@ ensures (\\forall int i; 0 <= i && i < a.length; a[i] <= \\result);
    //@ ensures (\\exists int i; 0 <= i && i < a.length; a[i] == \\result);
    static int arrayMax(int[] a) {
        int best = a[0];
        int idx = 1;
        //@ loop_invariant 1 <= idx && idx <= a.length;
        //@ loop_invariant (\\forall int k; 0 <= k && k < idx; a[k] <= best);
        //@ loop_invariant (\\exists int k; 0 <= k && k < idx; a[k] == best);
        while (idx < a.length) {
            if (a[idx] > best) {
                best = a[idx];
            }
            idx = idx + 1;
        }
        return best;
    }
}
""",
        [("arrayMax", [[1]]), ("arrayMax", [[3, 1, 2]]), ("arrayMax", [[-5, -2, -9]]), ("arrayMax", [[2, 2, 2]]), ("arrayMax", [[0, 9, 9, 1]])],
    ),
    (
        "linear_search",
        """
class LinearSearch {
    //@ requires true;
    //@ ensures \\result >= 0 ==> (\\result < a.length && a[\\result] == target);
    //@ ensures \\result >= 0 ==> (\\forall int k; 0 <= k && k < \\result; a[k] != target);
    //@ ensures \\result < 0 ==> (\\forall int k; 0 <= k && k < a.length; a[k] != target);
    static int indexOf(int[] a, int target) {
        int i = 0;
        //@ loop_invariant 0 <= i && i <= a.length;
        //@ loop_invariant (\\forall int k; 0 <= k && k < i; a[k] != target);
        while (i < a.length) {
            if (a[i] == target) {
                return i;
            } else {
                i = i + 1;
            }
        }
        return 0 - 1;
    }
}
""",
        [("indexOf", [[1, 2, 3], 2]), ("indexOf", [[1, 2, 3], 9]), ("indexOf", [[], 1]), ("indexOf", [[7, 7], 7]), ("indexOf", [[4], 4])],
    ),
    (
        "all_positive",
        """
class AllPositive {
    //@ requires true;
    //@ ensures \\result <==> (\\forall int i; 0 <= i && i < a.length; a[i] > 0);
    static boolean allPositive(int[] a) {
        int i = 0;
        int n = a.length;
        boolean ok = true;
        //@ loop_invariant 0 <= i && i <= n;
        //@ loop_invariant ok <==> (\\forall int k; 0 <= k && k < i; a[k] > 0);
        while (i < n) {
            if (a[i] <= 0) {
                ok = false;
            }
            i = i + 1;
        }
        return ok;
    }
}
""",
        [("allPositive", [[1, 2, 3]]), ("allPositive", [[1, 0, 3]]), ("allPositive", [[]]), ("allPositive", [[-1]])],
    ),
    (
        "reverse_in_place",
        """
class ReverseInPlace {
    //@ requires true;
    //@ ensures (\\forall int k; 0 <= k && k < a.length; \\result[k] == \\old(a)[a.length - 1 - k]);
    static int[] reverse(int[] a) {
        int lo = 0;
        int hi = a.length - 1;
        //@ loop_invariant 0 <= lo;
        //@ loop_invariant lo + hi == a.length - 1;
        while (lo < hi) {
            int tmp = a[lo];
            a[lo] = a[hi];
            a[hi] = tmp;
            lo = lo + 1;
            hi = hi - 1;
        }
        return a;
    }
}
""",
        [("reverse", [[1, 2, 3]]), ("reverse", [[]]), ("reverse", [[5]]), ("reverse", [[1, 2, 3, 4]])],
    ),
    (
        "prefix_match",
        """
class PrefixMatch {
    //@ requires true;
    //@ ensures \\result <==> (p.length() <= s.length() && (\\forall int i; 0 <= i && i < p.length(); s.charAt(i) == p.charAt(i)));
    static boolean startsWith(String s, String p) {
        if (p.length() > s.length()) {
            return false;
        }
        int i = 0;
        int n = p.length();
        //@ loop_invariant 0 <= i && i <= n;
        //@ loop_invariant (\\forall int k; 0 <= k && k < i; s.charAt(k) == p.charAt(k));
        while (i < n) {
            if (s.charAt(i) != p.charAt(i)) {
                return false;
            } else {
                i = i + 1;
            }
        }
        return true;
    }
}
""",
        [("startsWith", ["hello", "he"]), ("startsWith", ["hello", "hex"]), ("startsWith", ["", ""]), ("startsWith", ["a", "ab"]), ("startsWith", ["same", "same"])],
    ),
    # ------------------------------------------------------------ nested-loop
    (
        "mult_by_add",
        """
class MultByAdd {
    //@ requires 0 <= m && m <= 60 && 0 <= n && n <= 60;
    //@ ensures \\result == m * n;
    static int multiply(int m, int n) {
        int acc = 0;
        //@ loop_invariant 0 <= i && i <= m;
        //@ loop_invariant acc == i * n;
        for (int i = 0; i < m; i++) {
            //@ loop_invariant 0 <= j && j <= n;
            //@ loop_invariant acc == i * n + j;
            for (int j = 0; j < n; j++) {
                acc = acc + 1;
            }
        }
        return acc;
    }
}
""",
        [("multiply", [0, 5]), ("multiply", [3, 4]), ("multiply", [7, 0]), ("multiply", [12, 12])],
    ),
    (
        "bubble_sort",
        """
class BubbleSort {
    //@ requires a.length <= 40;
    //@ ensures (\\forall int k; 0 <= k && k < a.length - 1; \\result[k] <= \\result[k + 1]);
    static int[] bubbleSort(int[] a) {
        int n = a.length;
        //@ loop_invariant 0 <= i && i <= n;
        //@ loop_invariant (\\forall int k; n - i <= k && k < n - 1; a[k] <= a[k + 1]);
        for (int i = 0; i < n; i++) {
            //@ loop_invariant 0 <= j && j + 1 <= n - i;
            //@ loop_invariant (\\forall int k; 0 <= k && k < j; a[k] <= a[j]);
            for (int j = 0; j + 1 < n - i; j++) {
                if (a[j] > a[j + 1]) {
                    int t = a[j];
                    a[j] = a[j + 1];
                    a[j + 1] = t;
                }
            }
        }
        return a;
    }
}
""",
        [("bubbleSort", [[3, 1, 2]]), ("bubbleSort", [[]]), ("bubbleSort", [[5, 4, 3, 2, 1]]), ("bubbleSort", [[1, 1, 1]]), ("bubbleSort", [[2, 1]])],
    ),
]


def main():
    corpus_root = ROOT / "src" / "speceval" / "data" / "corpus"
    (corpus_root / "programs").mkdir(parents=True, exist_ok=True)
    (corpus_root / "tests").mkdir(parents=True, exist_ok=True)

    for i, (entry_id, source, seeds) in enumerate(PROGRAMS):
        unit = parse_unit(source)
        text = print_unit(unit)
        prog_path = corpus_root / "programs" / f"{entry_id}.sj"
        prog_path.write_text(text, "utf-8")

        prepared = prepare(unit)
        tests = []
        for method, args in seeds:
            outcome, _ = execute(unit, TestCase(method, args), prepared=prepared)
            if outcome.fault_kind is not None:
                raise SystemExit(f"{entry_id}: seed test {method}{args} faults: {outcome.fault_kind}")
            tests.append(TestCase(method, args, outcome.value))
        tests_path = corpus_root / "tests" / f"{entry_id}.jsonl"
        tests_path.write_text("".join(t.to_json() + "\n" for t in tests), "utf-8")

        entry = validate_entry(entry_id, prog_path, tests_path)
        added = augment_tests(entry, AUGMENT_SEED + i, budget=400, target_size=TARGET_SUITE)
        if added:
            with tests_path.open("a", encoding="utf-8") as fh:
                for t in added:
                    fh.write(t.to_json() + "\n")
        entry = validate_entry(entry_id, prog_path, tests_path)
        print(
            f"{entry_id:18s} {entry.stats['structure']:12s} "
            f"tests={entry.stats['num_tests']:3d} "
            f"branch_cov={entry.stats['branch_coverage']:.3f}"
        )

    manifest = write_manifest(corpus_root)
    agg_counts: dict[str, int] = {}
    for rec in manifest["entries"]:
        agg_counts[rec["stats"]["structure"]] = agg_counts.get(rec["stats"]["structure"], 0) + 1
    total = len(manifest["entries"])
    avg_cov = sum(r["stats"]["branch_coverage"] for r in manifest["entries"]) / total
    avg_tests = sum(r["stats"]["num_tests"] for r in manifest["entries"]) / total
    print(f"\n{total} programs; classes {agg_counts}; "
          f"avg branch coverage {avg_cov:.4f}; avg tests {avg_tests:.2f}")
    print(json.dumps({"written": str(corpus_root)}))


if __name__ == "__main__":
    main()
