"""Published two-regime indicator table (57 monthly points, 4 decimals).

Columns: t, basic-mode value, strategic-planning value, printed delta.
Values are kept as strings so the transcription stays exact.
"""

ROWS = (
    (1, "87.3361", "86.3361", "-1.0000"),
    (2, "70.9440", "69.9439", "-1.0001"),
    (3, "51.4324", "47.4322", "-4.0002"),
    (4, "56.3529", "52.3533", "-3.9996"),
    (5, "59.2634", "58.2642", "-0.9992"),
    (6, "73.3888", "73.3893", "0.0005"),
    (7, "95.2454", "95.2459", "0.0005"),
    (8, "92.6417", "92.6422", "0.0004"),
    (9, "95.5266", "95.5275", "0.0009"),
    (10, "70.1725", "71.1725", "1.0000"),
    (11, "58.4166", "61.4166", "3.0000"),
    (12, "56.4765", "59.4765", "3.0000"),
    (13, "61.8773", "64.8773", "3.0000"),
    (14, "71.8743", "74.8685", "2.9942"),
    (15, "52.4501", "55.4537", "3.0036"),
    (16, "53.9159", "56.9331", "3.0172"),
    (17, "84.0648", "84.0583", "-0.0065"),
    (18, "114.4254", "114.4221", "-0.0033"),
    (19, "132.1967", "132.1964", "-0.0003"),
    (20, "153.9033", "153.9141", "0.0108"),
    (21, "164.5378", "164.5295", "-0.0083"),
    (22, "150.0201", "150.9962", "0.9761"),
    (23, "140.7430", "144.7379", "3.9948"),
    (24, "115.0949", "119.0896", "3.9947"),
    (25, "87.0156", "91.0163", "4.0007"),
    (26, "100.5965", "104.6030", "4.0065"),
    (27, "87.5916", "91.5951", "4.0035"),
    (28, "76.0417", "79.0439", "3.0022"),
    (29, "76.2642", "76.2632", "-0.0010"),
    (30, "96.3218", "95.3218", "-1.0000"),
    (31, "105.1011", "104.1020", "-0.9991"),
    (32, "98.6620", "97.6634", "-0.9986"),
    (33, "82.1931", "81.1925", "-1.0006"),
    (34, "76.2280", "75.2241", "-1.0038"),
    (35, "68.5178", "68.5158", "-0.0020"),
    (36, "60.5149", "60.5134", "-0.0015"),
    (37, "53.1263", "53.1275", "0.0013"),
    (38, "61.6513", "61.6518", "0.0006"),
    (39, "53.5085", "53.5087", "0.0002"),
    (40, "51.8387", "51.8420", "0.0033"),
    (41, "72.0274", "72.0271", "-0.0002"),
    (42, "93.0773", "93.0771", "-0.0002"),
    (43, "99.2277", "99.2276", "-0.0001"),
    (44, "115.7921", "115.7833", "-0.0089"),
    (45, "110.1212", "110.1150", "-0.0062"),
    (46, "103.6429", "103.6377", "-0.0052"),
    (47, "88.2175", "87.2174", "-1.0002"),
    (48, "69.2655", "68.2651", "-1.0004"),
    (49, "55.1417", "54.1424", "-0.9993"),
    (50, "63.5110", "62.5119", "-0.9991"),
    (51, "50.0201", "49.0191", "-1.0009"),
    (52, "61.5773", "60.5763", "-1.0010"),
    (53, "60.3298", "59.3258", "-1.0040"),
    (54, "147.3276", "147.3281", "0.0004"),
    (55, "158.4131", "158.4138", "0.0008"),
    (56, "156.8698", "156.8698", "0.0000"),
    (57, "167.8964", "167.8964", "0.0000"),
)

# published totals and difference, 2 decimals
TOTAL_BASIC = 5069.93
TOTAL_STRAT = 5089.90
TOTAL_DELTA = 19.96
