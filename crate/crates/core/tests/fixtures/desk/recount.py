"""Independent recount of quasi-bridging pairs in ./trees.

Re-reads the bracketed files with its own parser and applies the
extraction rules directly. Prints the number of pairs that should be
generated and the number of inner-NP rejections.
"""
import os
import re
import sys

POSTMOD_TAGS = {",", ":", "-LRB-", "IN", "TO", "WDT", "WP", "WP$"}
DETS = {"DT", "PDT", "PRP$"}
NOUNS = {"NN", "NNS", "NNP", "NNPS"}


def parse(text):
    toks = re.findall(r"\(|\)|[^\s()]+", text)
    pos = 0
    trees = []

    def node():
        nonlocal pos
        assert toks[pos] == "("
        pos += 1
        label = ""
        if toks[pos] not in "()":
            label = toks[pos]
            pos += 1
        if toks[pos] not in "()":
            word = toks[pos]
            pos += 2
            return None if label == "-NONE-" else ("leaf", label, word)
        kids = []
        while toks[pos] != ")":
            k = node()
            if k is not None:
                kids.append(k)
        pos += 1
        return (label, kids) if kids else None

    while pos < len(toks):
        t = node()
        while t and t[0] == "" and len(t[1]) == 1:
            t = t[1][0]
        if t:
            trees.append(t)
    return trees


def is_leaf(n):
    return n[0] == "leaf"


def cat(label):
    return label if label.startswith("-") else re.split(r"[-=]", label)[0]


def is_np(n):
    return not is_leaf(n) and cat(n[0]) == "NP"


def leaves(n):
    return [n] if is_leaf(n) else [l for k in n[1] for l in leaves(k)]


def nodes(n):
    yield n
    if not is_leaf(n):
        for k in n[1]:
            yield from nodes(k)


def has_np_below(n):
    return any(is_np(m) for k in ([] if is_leaf(n) else n[1]) for m in nodes(k))


def any_np(ns):
    return any(is_np(m) for k in ns for m in nodes(k))


def head(side):
    side = list(side)
    while side and side[0][1] in DETS:
        side.pop(0)
    if not side or not any(l[1] in NOUNS for l in side):
        return None
    end = next((i for i in range(1, len(side)) if side[i][1] in POSTMOD_TAGS), len(side))
    region = side[:end]
    nouns = [l for l in region if l[1] in NOUNS]
    return (nouns[-1] if nouns else region[-1])[2].lower()


def match(np_node, counts):
    kids = np_node[1]
    last = kids[-1]
    if (len(kids) >= 2 and not is_leaf(last) and cat(last[0]) == "PP" and len(last[1]) == 2):
        prep, y = last[1]
        x_part = kids[:-1]
        if is_leaf(prep) and prep[1] == "IN" and not is_leaf(y):
            if not is_np(y):
                if any_np([y]):
                    counts["inner_np"] += 1
                return None
            phrase = len(x_part) == 1 and not is_leaf(x_part[0])
            if not (phrase and cat(x_part[0][0]) not in ("NP", "NML", "NX")):
                x_np = has_np_below(x_part[0]) if phrase else any_np(x_part)
                if x_np or has_np_below(y):
                    counts["inner_np"] += 1
                    return None
                return [l for k in x_part for l in leaves(k)], leaves(y)
    if len(kids) < 2:
        return None
    if is_np(kids[0]) and leaves(kids[0])[-1][1] == "POS":
        ys = leaves(kids[0])
        if len(ys) < 2:
            return None
        if has_np_below(kids[0]) or any_np(kids[1:]):
            counts["inner_np"] += 1
            return None
        return [l for k in kids[1:] for l in leaves(k)], ys[:-1]
    if all(is_leaf(k) for k in kids):
        p = next((i for i, k in enumerate(kids) if k[1] == "POS"), None)
        if p is None or p == 0 or p == len(kids) - 1:
            return None
        return kids[p + 1:], kids[:p]
    return None


def count_dir(d):
    total = 0
    counts = {"inner_np": 0}
    for name in sorted(os.listdir(d)):
        if name.startswith("."):
            continue
        with open(os.path.join(d, name)) as f:
            sents = parse(f.read())
        words = [{l[2].lower() for l in leaves(t)} for t in sents]
        for i, t in enumerate(sents):
            for n in nodes(t):
                if not is_np(n):
                    continue
                m = match(n, counts)
                if m is None:
                    continue
                xh, yh = head(m[0]), head(m[1])
                if xh is None or yh is None or xh == yh:
                    continue
                if any(j != i and yh in w and xh not in w for j, w in enumerate(words)):
                    total += 1
    return total, counts["inner_np"]


if __name__ == "__main__":
    d = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(os.path.abspath(__file__)), "trees")
    total, inner = count_dir(d)
    print(f"pairs {total}")
    print(f"inner_np {inner}")
