db.orders.aggregate([
    { $lookup: {
        from: "inventory",
        let: { v: "$item" },
        pipeline: [
            { $match: { $expr: { $eq: [ "$$v", "$sku" ] } } }
        ],
        as: "a"
    } }
])
