#!/usr/bin/env python3
"""Independent re-implementation of the preprocessing rules, used once to
freeze vocabulary size and token count for the mini corpus fixture.

Rules: title + newline + body; split on characters that are neither ASCII
alphanumerics nor non-ASCII; lowercase ASCII; drop pure digit tokens,
stopwords and tokens shorter than min_token_len code points; keep terms
present in at least min_doc_count documents.
"""
import json
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parents[2] / "data"


def tokens(text):
    cur, out = [], []
    for ch in text:
        if (ch.isascii() and ch.isalnum()) or not ch.isascii():
            cur.append(ch.lower() if ch.isascii() else ch)
        elif cur:
            out.append("".join(cur))
            cur = []
    if cur:
        out.append("".join(cur))
    return out


def main(min_doc_count=5, min_token_len=2):
    stop = set()
    for line in open(ROOT / "stopwords.txt", encoding="utf-8"):
        line = line.strip()
        if line and not line.startswith("#"):
            stop.add(line.lower())
    docs = []
    labels = {"regulatory": 0, "non-regulatory": 0, None: 0}
    for line in open(ROOT / "mini_corpus.jsonl", encoding="utf-8"):
        a = json.loads(line)
        labels[a["label"]] += 1
        text = (a["title"] + "\n" + a["body"]) if a["title"] else a["body"]
        docs.append([t for t in tokens(text)
                     if not t.isdigit() and t not in stop and len(t) >= min_token_len])
    df = {}
    for d in docs:
        for t in set(d):
            df[t] = df.get(t, 0) + 1
    vocab = {t for t, n in df.items() if n >= min_doc_count}
    total = sum(1 for d in docs for t in d if t in vocab)
    empty = sum(1 for d in docs if not any(t in vocab for t in d))
    manifest = {
        "articles": len(docs),
        "regulatory": labels["regulatory"],
        "non_regulatory": labels["non-regulatory"],
        "unlabeled": labels[None],
        "min_doc_count": min_doc_count,
        "min_token_len": min_token_len,
        "vocab_size": len(vocab),
        "total_tokens": total,
        "empty_docs": empty,
    }
    json.dump(manifest, open(ROOT / "mini_corpus.manifest.json", "w"), indent=2)
    print(manifest)


if __name__ == "__main__":
    main(*map(int, sys.argv[1:]))
