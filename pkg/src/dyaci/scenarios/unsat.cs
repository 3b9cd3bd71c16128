# ground and not derivable
senc(a, b), c |> a
