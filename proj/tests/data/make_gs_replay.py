"""Rebuilds the GS 2008-10-07 replay fixture: 58 NYSE trades, the first one
regular and the remaining 57 ISO, 86000 shares, falling from 121.35 to 119.46
in 25 ms clock steps, with two venues quoting in the preceding second."""

BASE = 36_000_000

trades = []
for i in range(58):
    cents = 12135 - round(189 * i / 57)
    size = 500 if i == 0 else 1500
    cond = "@" if i == 0 else "F"
    trades.append((BASE + 25 * (i // 4), "GS", "NYSE", cents, size, cond))

quotes = [
    (BASE - 3000, "GS", "NYSE", 12133, 800, 12140, 500),
    (BASE - 2500, "GS", "ARCA", 12132, 300, 12141, 400),
    (BASE - 900, "GS", "NYSE", 12135, 1000, 12140, 500),
    (BASE - 600, "GS", "ARCA", 12134, 300, 12140, 200),
    (BASE + 400, "GS", "NYSE", 11940, 400, 11960, 300),
    (BASE + 450, "GS", "ARCA", 11945, 200, 11962, 300),
]


def px(c):
    return f"{c // 100}.{c % 100:02d}00"


with open("gs_20081007_trades.csv", "w") as f:
    f.write("ts_ms,symbol,exchange,price,size,condition\n")
    for ts, sym, ex, c, sz, cond in trades:
        f.write(f"{ts},{sym},{ex},{px(c)},{sz},{cond}\n")

with open("gs_20081007_quotes.csv", "w") as f:
    f.write("ts_ms,symbol,exchange,bid,bid_size,offer,offer_size\n")
    for ts, sym, ex, b, bs, o, os_ in quotes:
        f.write(f"{ts},{sym},{ex},{px(b)},{bs},{px(o)},{os_}\n")
