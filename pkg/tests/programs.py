"""Fixture programs for every runtime.

Each language has three programs over the "double the integer on stdin"
task: a correct one, a partial one that is right only on even inputs, and
a broken one (compile error, or a syntax error for interpreted languages).
"""

from transpile_harness.core import LanguageId as L

DOUBLE_INPUTS = ["1", "2", "3", "4"]
DOUBLE_OUTPUTS = ["2", "4", "6", "8"]
# odd inputs go through n * 3 in the partial programs
PARTIAL_VECTOR = (False, True, False, True)

PROGRAMS = {
    L.PYTHON: {
        "correct": "n = int(input())\nprint(n * 2)\n",
        "partial": "n = int(input())\nprint(n * 2 if n % 2 == 0 else n * 3)\n",
        "broken": "def f(:\n    pass\n",
    },
    L.CPP: {
        "correct": "#include <iostream>\nint main() { long long n; std::cin >> n; std::cout << n * 2 << \"\\n\"; return 0; }\n",
        "partial": "#include <iostream>\nint main() { long long n; std::cin >> n; std::cout << (n % 2 == 0 ? n * 2 : n * 3) << \"\\n\"; }\n",
        "broken": "int main() { return undefined_name; }\n",
    },
    L.CSHARP: {
        "correct": "using System;\nclass Program { static void Main() { long n = long.Parse(Console.ReadLine().Trim()); Console.WriteLine(n * 2); } }\n",
        "partial": "using System;\nclass Program { static void Main() { long n = long.Parse(Console.ReadLine().Trim()); Console.WriteLine(n % 2 == 0 ? n * 2 : n * 3); } }\n",
        "broken": "class Program { static void Main() { int x = ; } }\n",
    },
    L.JAVA: {
        "correct": "import java.util.Scanner;\npublic class Main { public static void main(String[] args) { long n = new Scanner(System.in).nextLong(); System.out.println(n * 2); } }\n",
        "partial": "import java.util.Scanner;\npublic class Main { public static void main(String[] args) { long n = new Scanner(System.in).nextLong(); System.out.println(n % 2 == 0 ? n * 2 : n * 3); } }\n",
        "broken": "public class Main { public static void main(String[] args) { int x = ; } }\n",
    },
    L.JAVASCRIPT: {
        "correct": "const n = parseInt(require('fs').readFileSync(0, 'utf8').trim(), 10);\nconsole.log(n * 2);\n",
        "partial": "const n = parseInt(require('fs').readFileSync(0, 'utf8').trim(), 10);\nconsole.log(n % 2 === 0 ? n * 2 : n * 3);\n",
        "broken": "function (\n",
    },
    L.GO: {
        "correct": "package main\n\nimport \"fmt\"\n\nfunc main() {\n\tvar n int64\n\tfmt.Scan(&n)\n\tfmt.Println(n * 2)\n}\n",
        "partial": "package main\n\nimport \"fmt\"\n\nfunc main() {\n\tvar n int64\n\tfmt.Scan(&n)\n\tif n%2 == 0 {\n\t\tfmt.Println(n * 2)\n\t} else {\n\t\tfmt.Println(n * 3)\n\t}\n}\n",
        "broken": "package main\n\nfunc main() { x := }\n",
    },
    L.PERL: {
        "correct": "my $n = <STDIN>;\nchomp $n;\nprint $n * 2, \"\\n\";\n",
        "partial": "my $n = <STDIN>;\nchomp $n;\nprint(($n % 2 == 0 ? $n * 2 : $n * 3), \"\\n\");\n",
        "broken": "sub {\n",
    },
    L.RUBY: {
        "correct": "n = gets.to_i\nputs n * 2\n",
        "partial": "n = gets.to_i\nputs(n.even? ? n * 2 : n * 3)\n",
        "broken": "def f(\n",
    },
    L.RUST: {
        "correct": "use std::io::Read;\nfn main() { let mut s = String::new(); std::io::stdin().read_to_string(&mut s).unwrap(); let n: i64 = s.trim().parse().unwrap(); println!(\"{}\", n * 2); }\n",
        "partial": "use std::io::Read;\nfn main() { let mut s = String::new(); std::io::stdin().read_to_string(&mut s).unwrap(); let n: i64 = s.trim().parse().unwrap(); println!(\"{}\", if n % 2 == 0 { n * 2 } else { n * 3 }); }\n",
        "broken": "fn main() { let x: i32 = \"no\"; }\n",
    },
    L.HASKELL: {
        "correct": "main :: IO ()\nmain = do\n  n <- readLn :: IO Integer\n  print (n * 2)\n",
        "partial": "main :: IO ()\nmain = do\n  n <- readLn :: IO Integer\n  print (if even n then n * 2 else n * 3)\n",
        "broken": "main = do let\n",
    },
}

# programs used by the determinism filter checks
PURE_ARITHMETIC = "n = int(input())\nprint(sum(i * i for i in range(n)))\n"
TIME_PRINTER = "import time\nprint(time.time_ns())\n"
UNSEEDED_RANDOM = "import random\nprint(random.random())\n"
