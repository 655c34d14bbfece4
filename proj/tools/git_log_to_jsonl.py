#!/usr/bin/env python3
"""Convert `git log` of a repository into the commit JSON lines read by `gwm mine`.

Each line: {"timestamp", "author", "files", "churn", "message"}, oldest first.
Churn per file is the added-line count from --numstat (binary files count 0).
Commits touching no file (merges) are dropped.
"""

import argparse
import json
import subprocess
import sys

SEP = "\x1e"


def read_log(repo, rev):
    fmt = SEP + "%H%x00%at%x00%aE%x00%s"
    cmd = ["git", "-C", repo, "log", "--reverse", "--no-merges", "--numstat", "--format=" + fmt]
    if rev:
        cmd.append(rev)
    return subprocess.run(cmd, check=True, capture_output=True, text=True, errors="replace").stdout


def parse(text):
    for block in text.split(SEP):
        if not block.strip():
            continue
        header, _, body = block.partition("\n")
        _sha, ts, author, message = header.split("\x00", 3)
        files, churn = [], {}
        for line in body.splitlines():
            parts = line.split("\t")
            if len(parts) != 3:
                continue
            added, _deleted, path = parts
            if " => " in path:
                continue  # renames; the new name shows up on later commits
            files.append(path)
            churn[path] = churn.get(path, 0) + (int(added) if added.isdigit() else 0)
        if files:
            yield {"timestamp": int(ts), "author": author, "files": files, "churn": churn, "message": message}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("repo", help="path to a git working copy")
    ap.add_argument("--rev", help="revision range, e.g. v1.0..main")
    ap.add_argument("-o", "--output", help="output file (default stdout)")
    args = ap.parse_args()
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    with out:
        for commit in parse(read_log(args.repo, args.rev)):
            out.write(json.dumps(commit, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
