"""Per-criterion commit-message search terms for keyword tagging.

A commit message is tagged with a criterion when its lowercased text contains
any of that criterion's terms as a substring. Terms are intentionally broad
(some are prefixes like "fix concurre") to recall morphological variants.
"""

from themis.records import Criterion

_FC_TERMS = (
    'adjust logic', 'align', 'boundary case', 'bug fix', 'class misus', 'corner case',
    'correct algorithm', 'correct infinite', 'correct layout', 'correct logic', 'edge case',
    'edgecase', 'enhancement', 'error handling', 'error recovery', 'faulty index', 'faulty logic',
    'faulty loop', 'feature', 'fix broken', 'fix bug', 'fix cache', 'fix case', 'fix concurre',
    'fix defect', 'fix do', 'fix duplicate', 'fix else', 'fix error', 'fix exception', 'fix fault',
    'fix for', 'fix if', 'fix infinite', 'fix issue', 'fix iteration', 'fix logic', 'fix loop',
    'fix null', 'fix problem', 'fix recursion', 'fix regres', 'fix switch', 'fix ui', 'fix ux',
    'fix while', 'function misus', 'handle error', 'handle exception', 'handle failure',
    'handle fault', 'handle null', 'handling error', 'handling exception', 'handling failure',
    'illegal command', 'illegal comment', 'illegal condition', 'illegal declaration',
    'illegal definition', 'illegal directive', 'illegal expression', 'illegal field',
    'illegal indentation', 'illegal index', 'illegal key', 'illegal offset', 'illegal variable',
    'input handling', 'integer overflow', 'library misus', 'logic error', 'missing command',
    'missing comment', 'missing condition', 'missing declaration', 'missing definition',
    'repair broken', 'repair bug', 'repair error', 'repair issue', 'resolve logic', 'self assign',
    'self-assign', 'unclosed brace', 'unclosed bracket', 'unclosed comment',
    'unclosed parenthesis', 'unclosed string', 'undefined class', 'undefined constant',
    'undefined field', 'undefined function', 'undefined index', 'undefined key',
    'undefined member', 'undefined method', 'undefined object', 'undefined offset',
    'undefined property', 'undefined value', 'undefined variable', 'uninitialized class',
    'uninitialized constant', 'uninitialized field', 'uninitialized function',
    'uninitialized index', 'uninitialized key', 'uninitialized member', 'uninitialized method',
    'uninitialized object', 'uninitialized offset', 'uninitialized property',
    'uninitialized value', 'uninitialized variable', 'unmatched brace', 'unmatched bracket',
    'wrong logic', 'wrong loop', 'wrong variable', 'wrongly assign',
)

_EE_TERMS = (
    'add async', 'asynchronous', 'avoid unnecessary computation', 'batch api', 'batch operation',
    'batch proc', 'boost efficiency', 'boost performance', 'cache frequently', 'cache function',
    'cache results', 'cache the', 'cache values', 'cache variables', 'cache with memoization',
    'caching', 'code optimization', 'cold path', 'concurrent', 'constant time', 'constant-time',
    'continuous batch', 'decrease runtime', 'dynamic batch', 'early termination',
    'efficiency improvement', 'efficient access', 'efficient algorithm', 'efficient code',
    'efficient execution', 'efficient implementation', 'efficient iteration',
    'efficient processing', 'efficient structures', 'enhance bit manipulation',
    'enhance bit operations', 'enhance bit twiddling', 'enhance bitwise', 'enhance efficiency',
    'enhance latency', 'enhance processing speed', 'enhance sort', 'faster', 'fix latency',
    'fix stalling', 'fix startup time', 'fix time complexity', 'hash', 'hot path',
    'implement async operations', 'implement connection pooling',
    'implement efficient data serialization', 'implement lazy evaluation',
    'implement lazy loading', 'implement multithreading', 'implement parallel processing',
    'implement producer-consumer pattern', 'branch prediction', 'improve cache coherency',
    'cache hit', 'cache locality', 'cache performance', 'improve cache utilization',
    'improve speed', 'inplace', 'latency sensitive', 'load data in chunks', 'lru',
    'make code more efficient', 'make code more performant', 'make code more responsive',
    'make code run quicker', 'memoize', 'memory map', 'o(1) lookup', 'o(nlogn) sorting algorithm',
    'optimize data', 'optimize file', 'optimize i/o', 'optimize import', 'optimize initialization',
    'optimize latency', 'optimize list', 'optimize lookahead', 'optimize lookup', 'optimize loop',
    'optimize memoization', 'optimize merge step', 'optimize network requests',
    'optimize numpy operations', 'optimize path cost calculation', 'optimize pathfinding',
    'optimize performance', 'overhead reduc', 'oversynchroni', 'parallelize', 'perf improvement',
    'performance improvement', 'precompute expensive operations',
    'precompute frequently used results', 'precompute frequently used values',
    'precompute lookup tables', 'precompute results', 'precompute values', 'prune unnecessary',
    'quickness improvement', 'reduce algorithm complexity', 'reduce computational overhead',
    'reduce function call', 'reduce i/o operations', 'reduce lookup time', 'reduce overhead',
    'reduce recursion', 'reduce recursive call', 'reduce runtime', 'time complexity',
    'remove overhead', 'remove slow', 'replace slow', 'reduce latency', 'speed fix', 'speed up',
    'speedup', 'tail call optimization', 'unroll loops', 'use bisect for binary search',
    'use built-in', 'use builtin', 'use in-place', 'use list comprehension for speed', 'use map',
    'use numpy vectorization', 'use optimized', 'use set', 'utilize multiprocessing', 'vectorize',
    'work steal',
)

_ME_TERMS = (
    'fix memory management issue', 'fix memory', 'garbage collection', 'high memory',
    'improve memory allocation', 'improve memory bound', 'improve memory usage',
    'improve memory management', 'lazy eval', 'lazy load', 'memory bloat', 'memory consumption',
    'memory efficien', 'memory footprint', 'memory leak fix', 'memory leak', 'memory map',
    'memory optimization', 'memory pool', 'memory wastage', 'memory-efficien', 'resource leak',
    'unnecessary malloc', 'unnecessary memory alloc', 'use less memory', 'zero copy',
)

_RM_TERMS = (
    'abstract', 'anti-pattern', 'antipattern', 'appropriate nam', 'big class', 'big method',
    'break down', 'break up', 'builder pattern', 'chain of respons', 'circular dependency',
    'clarify', 'clarity', 'clean up', 'cleanup', 'code formatting', 'code layout', 'code path',
    'code quality', 'code smell', 'code style', 'coding standards', 'coding style', 'cohesion',
    'cohesive', 'command pattern', 'complex condition', 'consistent nam', 'control coupling',
    'control dependency', 'control flow', 'convention', 'cyclomatic', 'data clump',
    'data coupling', 'data dependency', 'dead assignment', 'dead class', 'dead code',
    'dead function', 'dead method', 'dead parameter', 'dead variable', 'decouple', 'deep nest',
    'deeply nest', 'dependency inversion', 'descriptive nam', 'dry', 'duplication', 'halstead',
    'inconsistent doc', 'inconsistent format', 'interface segregation', 'intimacy violation',
    'large class', 'large method', 'large parameter list', 'liskov substitution', 'long class',
    'long method', 'long parameter list', 'maintainability', 'maintainable', 'message chain',
    'modernize', 'modular', 'normalize', 'omitted default', 'omitted else', 'omitted error',
    'omitted exception', 'omitted if', 'omitted switch', 'open/closed', 'parallel inheritance',
    'pep 8', 'pep8', 'portability', 'primitive obsession', 'readability', 'readable',
    'reduce complexity', 'reduce coupling', 'reduce dependency', 'reduce depth', 'reduce nest',
    'refactor', 'refused bequest', 'remove goto', 'remove hardcod', 'separate', 'separation',
    'shotgun surgery', 'simplify', 'single responsibility', 'solid', 'split function',
    'style guide', 'tech debt', 'technical debt', 'temporary field', 'test coverage',
    'testability', 'testable', 'unconditional branch', 'unconditional control',
    'unconditional jump', 'unconditional statement', 'unused assignment', 'unused class',
    'unused code', 'unused function', 'unused method', 'unused parameter', 'unused variable',
    'visitor pattern',
)

_SH_TERMS = (
    'access control', 'android injection', 'auth bypass', 'auth forgery', 'authorization bypass',
    'avoid directory traversal', 'avoid dos attack', 'avoid file inclusion',
    'avoid format string vulnerability', 'avoid overflow', 'avoid vuln', 'avoid weak encryption',
    'avoid weak hashing', 'clear text pass', 'clear text secret', 'clear text sess',
    'clear-text cookie', 'clear-text cred', 'clear-text pass', 'clear-text secret',
    'clear-text sess', 'cmd injection', 'code injection', 'collision attack', 'collision resist',
    'command injection', 'critical patch', 'critical vuln', 'cross path injection',
    'cross site scripting', 'cross-path injection', 'cross-site scripting', 'csrf', 'cve', 'cwe',
    'data forgery', 'data validation', 'denial of service', 'deprecated hash', 'deprecate cipher',
    'deprecate encryption', 'deprecate vuln', 'deprecated crypto', 'dns prefetch',
    'double dealloc', 'double free', 'double-free', 'dynamic rege', 'dynamic require',
    'enhance safety', 'eval injection', 'exploit', 'expression injection', 'file injection',
    'fix deseriali', 'fix entropy', 'fix hash', 'fix key entropy', 'fix key length',
    'fix key randomness', 'fix key size', 'fix key strength', 'fix overflow', 'fix randomness',
    'fix safety', 'fix sensitive', 'fix secret', 'fix seriali', 'fix snyk', 'fix vuln',
    'fix weak cipher', 'fix weak encryption', 'fix weak hash', 'fixed entropy', 'fixed nonce',
    'fixed prng', 'fixed random', 'fixed seed', 'fixed-random', 'fortify', 'fragment injection',
    'hard-coded secret', 'hard-coded key', 'hard-coded password', 'hard-coded token',
    'hardcoded key', 'hardcoded password', 'hardcoded secret', 'hardcoded token', 'harden',
    'header injection', 'heap corrupt', 'heap overflow', 'http response split', 'imap injection',
    'improper authentication', 'improper authorization', 'improper validation', 'improve safety',
    'input validation', 'insufficient entropy', 'ldap injection', 'log injection',
    'meet-in-the-middle attack', 'mem align', 'memory abuse', 'memory alignment', 'memory corrup',
    'memory misuse', 'module injection', 'non-constant rege', 'non-constant require', 'nvd',
    'open redirect', 'origin validat', 'periodic random', 'permission bypass',
    'permission escalation', 'permission exploit', 'permission injection', 'permission override',
    'permission poisoning', 'plaintext cookie', 'plaintext cred', 'plaintext pass',
    'plaintext secret', 'plaintext sess', 'pointer abuse', 'pointer misma', 'pointer misuse',
    'pre-image attack', 'preimage attack', 'preimage resist', 'privilege elevation',
    'privilege escalation', 'privilege exploit', 'random byte', 'random-byterce',
    'remove deprecated encryption', 'remove deprecated hash', 'remove overflow', 'remove secret',
    'security', 'sess fix', 'sess hijack', 'sess poison', 'sess repla', 'session fixation',
    'session hijacking', 'session poisoning', 'session replay', 'shell injection', 'signal error',
    'signal exploit', 'signal injection', 'smtp injection', 'sql injection', 'sqli',
    'timing attack', 'type forgery', 'type injection', 'type validation', 'uaf', 'unauthori',
    'unsafe', 'unsalted hash', 'untrusted content', 'untrusted data', 'untrusted deseriali',
    'untrusted host', 'untrusted input', 'untrusted origin', 'untrusted source', 'untrusted user',
    'unverified data', 'unverified host', 'unverified input', 'unverified origin',
    'unverified source', 'unverified user', 'update hash', 'upgrade hash', 'use after dealloc',
    'use after free', 'use-after-free', 'validate auth', 'variable require', 'vuln fix',
    'vuln patch', 'vulnerability fix', 'vulnerability patch', 'xml external entit',
    'xml injection', 'xpath injection', 'xquery injection', 'xss', 'xxe', 'zero day', 'zero-day',
)

DEFAULT_CRITERIA_TERMS = {
    Criterion.FC: _FC_TERMS,
    Criterion.EE: _EE_TERMS,
    Criterion.ME: _ME_TERMS,
    Criterion.RM: _RM_TERMS,
    Criterion.SH: _SH_TERMS,
}
