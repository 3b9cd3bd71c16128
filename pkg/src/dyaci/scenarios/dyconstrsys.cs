# standard system (no ACI sets)
senc(X, a), pair(c, a) |> b
pair(X, c) |> a
