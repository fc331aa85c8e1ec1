# views/console_view.py

import logging
import sys


class ConsoleView:
    """
    Terminal front end: messages, the results table and a status line.
    """
    def __init__(self, out=None, err=None, quiet=False):
        self.out = out or sys.stdout
        self.err = err or sys.stderr
        self.quiet = quiet

    def show_info_message(self, title, message):
        logging.info(f"{title}: {message}")
        if not self.quiet:
            print(f"[{title}] {message}", file=self.out)

    def show_error_message(self, title, message):
        print(f"[{title}] ERROR: {message}", file=self.err)

    def show_table(self, header, rows):
        widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
        lines = ["  ".join(str(c).ljust(w) for c, w in zip(header, widths))]
        lines.append("  ".join("-" * w for w in widths))
        for r in rows:
            lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))
        print("\n".join(lines), file=self.out)

    def status(self, message):
        if not self.quiet:
            print(message, file=self.out)
